// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dksel/core.hpp"

namespace dksel {

// Embedding container: 6-byte ASCII magic "DKSEL1", then row count and
// dimension as unsigned 32-bit little-endian, then the n*d float32
// little-endian payload, row-major. File size is exactly 14 + 4*n*d bytes.
//
// Gold files are line-delimited JSON (UTF-8): one record per query with
// fields `query_id` (string), `gold` (array of row indices), and either
// `embedding` (array of d floats) or `embedding_ref` (row index into a
// separate query pool file).

inline constexpr char kEmbeddingMagic[7] = "DKSEL1";
inline constexpr std::size_t kEmbeddingHeaderBytes = 14;

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void save_embeddings(const std::filesystem::path& path,
                            const EmbeddingMatrix& pool) {
  if (pool.n == 0 || pool.d == 0)
    raise(Errc::BadParams, "refusing to write an empty matrix");
  if (pool.n > 0xffffffffull || pool.d > 0xffffffffull)
    raise(Errc::BadParams, "n or d exceeds the u32 header range");
  std::string buffer;
  buffer.reserve(kEmbeddingHeaderBytes + 4 * pool.n * pool.d);
  buffer.append(kEmbeddingMagic, 6);
  detail::put_u32_le(buffer, static_cast<std::uint32_t>(pool.n));
  detail::put_u32_le(buffer, static_cast<std::uint32_t>(pool.d));
  for (float v : pool.data)
    detail::put_u32_le(buffer, std::bit_cast<std::uint32_t>(v));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(Errc::BadFile, "cannot open " + path.string() + " for write");
  os.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!os) raise(Errc::BadFile, "short write to " + path.string());
}

/// Loads, validates, and normalizes a pool; the count of renormalized rows is
/// reported through `stats` and logged when nonzero.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                       NormalizationStats* stats = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::BadFile, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() >= 6 && bytes.compare(0, 6, kEmbeddingMagic, 6) != 0)
    raise(Errc::BadMagic, path.string() + ": bad magic (expected DKSEL1)");
  if (bytes.size() < kEmbeddingHeaderBytes)
    raise(Errc::TruncatedFile,
          path.string() + ": truncated at byte offset " +
              std::to_string(bytes.size()) + " (header needs 14 bytes)");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = detail::get_u32_le(raw + 6);
  const std::uint64_t d = detail::get_u32_le(raw + 10);
  const std::uint64_t expected = kEmbeddingHeaderBytes + 4ull * n * d;
  if (bytes.size() < expected)
    raise(Errc::TruncatedFile,
          path.string() + ": truncated at byte offset " +
              std::to_string(bytes.size()) + " (expected " +
              std::to_string(expected) + " bytes)");
  if (bytes.size() > expected)
    raise(Errc::BadFile, path.string() + ": " +
                             std::to_string(bytes.size() - expected) +
                             " trailing bytes after payload");
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = std::bit_cast<float>(
        detail::get_u32_le(raw + kEmbeddingHeaderBytes + 4 * i));
  NormalizationStats local;
  EmbeddingMatrix pool = validate_pool(
      EmbeddingMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d),
                      std::move(data)),
      &local);
  if (local.rescaled > 0)
    std::fprintf(stderr, "dksel: %s: renormalized %zu of %zu rows\n",
                 path.string().c_str(), local.rescaled, pool.n);
  if (stats != nullptr) *stats = local;
  return pool;
}

/// Parses a gold file against a loaded pool. `query_pool` backs
/// `embedding_ref` records and may be null when every record inlines its
/// embedding.
inline std::vector<QueryContext> load_gold_file(
    const std::filesystem::path& path, const EmbeddingMatrix& pool,
    const EmbeddingMatrix* query_pool = nullptr) {
  std::ifstream is(path);
  if (!is) raise(Errc::BadFile, "cannot open " + path.string());
  std::vector<QueryContext> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::BadFile, path.string() + ":" + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (!rec.contains("query_id") || !rec["query_id"].is_string())
      raise(Errc::BadFile, where + ": missing string field 'query_id'");
    if (!rec.contains("gold") || !rec["gold"].is_array())
      raise(Errc::BadFile, where + ": missing array field 'gold'");

    std::vector<float> embedding;
    if (rec.contains("embedding")) {
      if (!rec["embedding"].is_array())
        raise(Errc::BadFile, where + ": 'embedding' must be an array");
      for (const auto& v : rec["embedding"])
        embedding.push_back(v.get<float>());
      if (embedding.size() != pool.d)
        raise(Errc::DimensionMismatch,
              where + ": embedding has " + std::to_string(embedding.size()) +
                  " entries, pool dimension is " + std::to_string(pool.d));
    } else if (rec.contains("embedding_ref")) {
      if (query_pool == nullptr)
        raise(Errc::BadParams,
              where + ": 'embedding_ref' needs a query pool file");
      const std::uint64_t ref = rec["embedding_ref"].get<std::uint64_t>();
      if (ref >= query_pool->n)
        raise(Errc::BadParams, where + ": embedding_ref out of range");
      const auto row = query_pool->row(ref);
      embedding.assign(row.begin(), row.end());
    } else {
      raise(Errc::BadFile, where + ": need 'embedding' or 'embedding_ref'");
    }

    std::vector<Index> gold;
    for (const auto& g : rec["gold"]) {
      const std::int64_t idx = g.get<std::int64_t>();
      if (idx < 0 || static_cast<std::uint64_t>(idx) >= pool.n)
        raise(Errc::BadParams, where + ": gold index " + std::to_string(idx) +
                                   " out of range for pool of " +
                                   std::to_string(pool.n));
      gold.push_back(static_cast<Index>(idx));
    }
    queries.push_back(make_query_context(pool, embedding,
                                         rec["query_id"].get<std::string>(),
                                         std::move(gold)));
  }
  if (queries.empty())
    raise(Errc::BadFile, path.string() + ": no query records");
  return queries;
}

/// Writes queries with inline embeddings, one JSON record per line.
inline void save_gold_file(const std::filesystem::path& path,
                           std::span<const QueryContext> queries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) raise(Errc::BadFile, "cannot open " + path.string() + " for write");
  for (const QueryContext& q : queries) {
    if (q.embedding.empty())
      raise(Errc::BadParams,
            "query '" + q.id + "' has no embedding to serialize");
    nlohmann::ordered_json rec;
    rec["query_id"] = q.id;
    rec["embedding"] = q.embedding;
    rec["gold"] = q.gold;
    os << rec.dump() << "\n";
  }
  if (!os) raise(Errc::BadFile, "short write to " + path.string());
}

inline void write_json_file(const std::filesystem::path& path,
                            const nlohmann::ordered_json& value) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) raise(Errc::BadFile, "cannot open " + path.string() + " for write");
  os << value.dump(2) << "\n";
  if (!os) raise(Errc::BadFile, "short write to " + path.string());
}

}  // namespace dksel
