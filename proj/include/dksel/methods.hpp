// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "dksel/baselines.hpp"
#include "dksel/core.hpp"
#include "dksel/fw_solver.hpp"
#include "dksel/oracle.hpp"

namespace dksel {

/// Registered selectors; one shared dispatch for the sweep, the benchmark
/// harness, and the CLI.
enum class Method { Fw, Mmr, Dpp, TopK, Exact };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Fw: return "fw";
    case Method::Mmr: return "mmr";
    case Method::Dpp: return "dpp";
    case Method::TopK: return "topk";
    case Method::Exact: return "exact";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "fw") return Method::Fw;
  if (name == "mmr") return Method::Mmr;
  if (name == "dpp") return Method::Dpp;
  if (name == "topk") return Method::TopK;
  if (name == "exact") return Method::Exact;
  raise(Errc::BadParams, "unknown method '" + std::string(name) +
                             "' (expected fw|mmr|dpp|topk|exact)");
}

inline std::vector<Method> parse_method_list(std::string_view csv) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const auto token = csv.substr(
        start, comma == std::string_view::npos ? csv.size() - start
                                               : comma - start);
    if (!token.empty()) out.push_back(parse_method(token));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) raise(Errc::BadParams, "empty method list");
  return out;
}

inline SolveReport run_method(Method m, const EmbeddingMatrix& pool,
                              std::span<const float> relevance,
                              const SelectParams& params) {
  switch (m) {
    case Method::Fw:
      return solve_fw(pool, relevance, params);
    case Method::Mmr:
      return select_mmr(pool, relevance, params).first;
    case Method::Dpp:
      return select_dpp_greedy(pool, relevance, params).first;
    case Method::TopK:
      return select_topk(pool, relevance, params);
    case Method::Exact: {
      const auto t0 = std::chrono::steady_clock::now();
      oracle::BruteForceOptions opts;
      opts.enumerate_local_maxima = false;
      auto exhaustive = oracle::brute_force_ccbqp(pool, relevance, params, opts);
      const double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      return detail::finalize_vertex_report(pool, relevance, params,
                                            std::move(exhaustive.best_set), 0,
                                            dt);
    }
  }
  raise(Errc::BadParams, "unhandled method");
}

}  // namespace dksel
