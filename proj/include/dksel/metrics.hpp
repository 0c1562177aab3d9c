// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dksel/core.hpp"
#include "dksel/methods.hpp"

namespace dksel {

// Retrieval-quality metrics and the theta sweep producing per-query
// relevance/diversity records. Rank-aware metrics are deliberately absent:
// the selected set is consumed as a whole, not as a ranking.

/// |selected intersect gold| / |gold|.
inline double recall_at_k(std::span<const Index> selected,
                          std::span<const Index> gold) {
  if (gold.empty()) raise(Errc::EmptyGold, "gold set is empty");
  std::size_t hits = 0;
  for (Index g : gold)
    if (std::find(selected.begin(), selected.end(), g) != selected.end())
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

/// Intra-list average distance: mean pairwise cosine distance of the selected
/// rows, in [0, 2] for unit vectors. Computed through the row-sum identity
///   sum_{i<j} w_ij = (|sum_i e_i|^2 - sum_i w_ii) / 2
/// so the cost is O(k*d) rather than O(k^2*d).
inline double ilad(const EmbeddingMatrix& pool,
                   std::span<const Index> selected) {
  const std::size_t k = selected.size();
  if (k < 2) raise(Errc::TooFewItems, "ilad needs at least two items");
  std::vector<double> sum(pool.d, 0.0);
  double self = 0.0;
  for (Index i : selected) {
    if (i >= pool.n) raise(Errc::BadParams, "selected index out of range");
    const float* row = pool.data.data() + i * pool.d;
    for (std::size_t j = 0; j < pool.d; ++j)
      sum[j] += static_cast<double>(row[j]);
    self += detail::squared_norm_f32(row, pool.d);
  }
  const double sum2 = detail::squared_norm_f64(sum.data(), pool.d);
  const double kk = static_cast<double>(k) * (static_cast<double>(k) - 1.0);
  return 1.0 - (sum2 - self) / kk;
}

/// One sweep cell: a (method, theta, query) evaluation.
struct EvalRecord {
  std::string method;
  double theta = 0.0;
  Index k = 0;
  std::string query_id;
  double recall = 0.0;
  double ilad = 0.0;
  double latency_ms = 0.0;
  bool failed = false;
};

/// Runs every (method, theta, query) cell; a failing solve marks its record
/// failed instead of aborting the sweep. Latency is the selection call alone
/// (relevance computation and metric evaluation excluded).
inline std::vector<EvalRecord> pareto_sweep(
    const EmbeddingMatrix& pool, std::span<const QueryContext> queries,
    std::span<const Method> methods, std::span<const double> thetas,
    std::size_t k, const SelectParams& base = {}) {
  if (queries.empty()) raise(Errc::BadParams, "sweep needs at least one query");
  if (methods.empty()) raise(Errc::BadParams, "sweep needs at least one method");
  for (double t : thetas)
    if (!(t >= 0.0 && t <= 1.0))
      raise(Errc::BadParams, "theta values must lie in [0, 1]");

  std::vector<EvalRecord> records;
  records.reserve(methods.size() * thetas.size() * queries.size());
  for (Method m : methods) {
    for (double theta : thetas) {
      SelectParams params = base;
      params.k = k;
      params.theta = theta;
      for (const QueryContext& query : queries) {
        EvalRecord rec;
        rec.method = method_name(m);
        rec.theta = theta;
        rec.k = static_cast<Index>(k);
        rec.query_id = query.id;
        try {
          const SolveReport report =
              run_method(m, pool, query.relevance, params);
          rec.latency_ms = report.wall_time_s * 1e3;
          rec.recall = recall_at_k(report.selected, query.gold);
          rec.ilad = k >= 2 ? ilad(pool, report.selected) : 0.0;
        } catch (const Error& e) {
          rec.failed = true;
          std::fprintf(stderr, "dksel: sweep cell %s theta=%.3g query=%s: %s\n",
                       rec.method.c_str(), theta, rec.query_id.c_str(),
                       e.what());
        }
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

/// Per-(method, theta) aggregate of the sweep records, failed cells skipped.
struct SweepSummary {
  std::string method;
  double theta = 0.0;
  double mean_recall = 0.0;
  double mean_ilad = 0.0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  std::size_t queries = 0;
};

inline std::vector<SweepSummary> aggregate_sweep(
    std::span<const EvalRecord> records) {
  std::vector<SweepSummary> out;
  for (const EvalRecord& rec : records) {
    if (rec.failed) continue;
    SweepSummary* slot = nullptr;
    for (SweepSummary& s : out)
      if (s.method == rec.method && s.theta == rec.theta) slot = &s;
    if (slot == nullptr) {
      out.push_back(SweepSummary{rec.method, rec.theta, 0, 0, 0, 0, 0});
      slot = &out.back();
    }
    slot->mean_recall += rec.recall;
    slot->mean_ilad += rec.ilad;
    slot->mean_latency_ms += rec.latency_ms;
    ++slot->queries;
  }
  for (SweepSummary& s : out) {
    if (s.queries == 0) continue;
    const double q = static_cast<double>(s.queries);
    s.mean_recall /= q;
    s.mean_ilad /= q;
    s.mean_latency_ms /= q;
    std::vector<double> lat;
    for (const EvalRecord& rec : records)
      if (!rec.failed && rec.method == s.method && rec.theta == s.theta)
        lat.push_back(rec.latency_ms);
    std::sort(lat.begin(), lat.end());
    const std::size_t rank = (lat.size() * 95 + 99) / 100;  // nearest-rank p95
    s.p95_latency_ms = lat[std::min(lat.size() - 1, rank == 0 ? 0 : rank - 1)];
  }
  return out;
}

/// CSV schema: method,theta,k,query_id,recall,ilad,latency_ms.
/// Failed records are skipped; returns how many rows were written.
inline std::size_t write_eval_csv(std::ostream& os,
                                  std::span<const EvalRecord> records) {
  os << "method,theta,k,query_id,recall,ilad,latency_ms\n";
  char num[32];
  auto put = [&](double v) {
    std::snprintf(num, sizeof(num), "%.10g", v);
    os << num;
  };
  std::size_t written = 0;
  for (const EvalRecord& rec : records) {
    if (rec.failed) continue;
    os << rec.method << ',';
    put(rec.theta);
    os << ',' << rec.k << ',' << rec.query_id << ',';
    put(rec.recall);
    os << ',';
    put(rec.ilad);
    os << ',';
    put(rec.latency_ms);
    os << '\n';
    ++written;
  }
  return written;
}

}  // namespace dksel
