// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dksel/core.hpp"
#include "dksel/fw_solver.hpp"
#include "dksel/objective.hpp"

namespace dksel {

// Comparison selectors sharing solve_fw's report interface: plain top-k,
// greedy maximal marginal relevance, and fast greedy MAP inference for a
// determinantal point process kernel. Pairwise similarities are computed on
// demand from rows; nothing n-by-n is ever materialized.

/// Greedy diagnostics: selection order and the criterion value at each pick.
struct GreedyTrace {
  std::vector<Index> order;
  std::vector<double> marginal_scores;
};

namespace detail {

inline SolveReport finalize_vertex_report(const EmbeddingMatrix& pool,
                                          std::span<const float> relevance,
                                          const SelectParams& params,
                                          std::vector<Index> selected,
                                          std::size_t iterations,
                                          double wall_time_s) {
  SolveReport report;
  std::sort(selected.begin(), selected.end());
  report.selected = std::move(selected);
  report.iterations = iterations;
  report.integral = true;
  report.wall_time_s = wall_time_s;
  const auto x = selection_from_indices(pool.n, report.selected);
  report.objective = eval_objective(pool, relevance, x, params);
  const auto diag =
      vertex_diagnostics(pool, relevance, report.selected, params);
  report.local_max_certified = diag.cert.is_local_max;
  report.grad_gap = diag.cert.grad_gap;
  report.final_gap = diag.fw_gap;
  return report;
}

inline std::vector<Index> all_indices(std::size_t n) {
  std::vector<Index> out(n);
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

}  // namespace detail

/// Indicator of the k largest relevance scores (ties toward lower index).
inline SolveReport select_topk(const EmbeddingMatrix& pool,
                               std::span<const float> relevance,
                               const SelectParams& params) {
  params.validate(pool.n);
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  const auto t0 = std::chrono::steady_clock::now();
  auto selected = params.k == pool.n ? detail::all_indices(pool.n)
                                     : top_k_indices(relevance, params.k);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return detail::finalize_vertex_report(pool, relevance, params,
                                        std::move(selected), 0, dt);
}

/// Greedy maximal marginal relevance. The first pick maximizes relevance
/// alone; every later pick maximizes
///   theta*c_i - (1-theta)*max_{j selected} w_ij
/// over the unselected items, maintained via a running max-similarity vector
/// (O(k*n*d) total). Ties toward the lower index.
inline std::pair<SolveReport, GreedyTrace> select_mmr(
    const EmbeddingMatrix& pool, std::span<const float> relevance,
    const SelectParams& params) {
  params.validate(pool.n);
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  const std::size_t n = pool.n;
  const std::size_t k = params.k;
  const double theta = params.theta;
  const auto t0 = std::chrono::steady_clock::now();

  GreedyTrace trace;
  trace.order.reserve(k);
  trace.marginal_scores.reserve(k);

  if (k == n) {
    for (Index i = 0; i < n; ++i) {
      trace.order.push_back(i);
      trace.marginal_scores.push_back(static_cast<double>(relevance[i]));
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return {detail::finalize_vertex_report(pool, relevance, params,
                                           detail::all_indices(n), n, dt),
            trace};
  }

  std::vector<char> picked(n, 0);
  std::vector<double> best_sim(n, -2.0);  // below any cosine value
  const float* base = pool.data.data();
  const std::size_t d = pool.d;

  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      const double score =
          step == 0 ? static_cast<double>(relevance[i])
                    : theta * static_cast<double>(relevance[i]) -
                          (1.0 - theta) * best_sim[i];
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    picked[best] = 1;
    trace.order.push_back(static_cast<Index>(best));
    trace.marginal_scores.push_back(best_score);
    if (step + 1 == k) break;
    const float* just_added = base + best * d;
    detail::parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        if (picked[i]) continue;
        const double w = detail::dot_f32(base + i * d, just_added, d);
        if (w > best_sim[i]) best_sim[i] = w;
      }
    });
  }

  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {detail::finalize_vertex_report(pool, relevance, params, trace.order,
                                         k, dt),
          trace};
}

/// Fast greedy MAP inference for the DPP kernel
///   L = Diag(r) * E E^T * Diag(r),   r_i = exp(beta * c_i),
///   beta = theta / (1 - theta).
/// Maintains an incremental Cholesky factor per candidate: each step picks
/// the largest remaining conditional volume d2_i = det gain, then extends
/// every candidate's factor row in O(n*(d + t)). Total O(k*n*d + k^2*n).
/// Candidates whose remaining volume has collapsed (d2 <= 1e-12) are skipped;
/// if every remaining candidate has collapsed, the leftover slots are filled
/// by relevance so the selector still returns exactly k items.
inline std::pair<SolveReport, GreedyTrace> select_dpp_greedy(
    const EmbeddingMatrix& pool, std::span<const float> relevance,
    const SelectParams& params) {
  params.validate(pool.n);
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  if (params.theta >= 1.0 - 1e-9) {
    auto report = select_topk(pool, relevance, params);
    GreedyTrace trace;
    trace.order = report.selected;
    std::sort(trace.order.begin(), trace.order.end(), [&](Index a, Index b) {
      if (relevance[a] != relevance[b]) return relevance[a] > relevance[b];
      return a < b;
    });
    for (Index i : trace.order)
      trace.marginal_scores.push_back(static_cast<double>(relevance[i]));
    return {std::move(report), std::move(trace)};
  }

  const std::size_t n = pool.n;
  const std::size_t k = params.k;
  const auto t0 = std::chrono::steady_clock::now();

  GreedyTrace trace;
  trace.order.reserve(k);
  trace.marginal_scores.reserve(k);

  if (k == n) {
    for (Index i = 0; i < n; ++i) {
      trace.order.push_back(i);
      trace.marginal_scores.push_back(0.0);
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return {detail::finalize_vertex_report(pool, relevance, params,
                                           detail::all_indices(n), n, dt),
            trace};
  }

  const double beta = params.theta / (1.0 - params.theta);
  std::vector<double> quality(n);
  std::vector<double> d2(n);
  const float* base = pool.data.data();
  const std::size_t d = pool.d;
  for (std::size_t i = 0; i < n; ++i) {
    quality[i] = std::exp(beta * static_cast<double>(relevance[i]));
    d2[i] = quality[i] * quality[i] * detail::squared_norm_f32(base + i * d, d);
  }
  std::vector<double> chol(n * k, 0.0);  // per-candidate factor rows
  std::vector<char> picked(n, 0);
  constexpr double kDegenerate = 1e-12;

  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_d2 = kDegenerate;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      if (d2[i] > best_d2) {
        best_d2 = d2[i];
        best = i;
      }
    }
    if (best == n) {
      // No remaining volume; fill leftover slots by relevance.
      for (std::size_t fill = step; fill < k; ++fill) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (picked[i]) continue;
          if (pick == n || relevance[i] > relevance[pick]) pick = i;
        }
        picked[pick] = 1;
        trace.order.push_back(static_cast<Index>(pick));
        trace.marginal_scores.push_back(
            std::log(std::max(d2[pick], 1e-300)));
      }
      break;
    }
    picked[best] = 1;
    trace.order.push_back(static_cast<Index>(best));
    trace.marginal_scores.push_back(std::log(d2[best]));
    if (step + 1 == k) break;

    const double diag = std::sqrt(d2[best]);
    const float* best_row = base + best * d;
    const double best_quality = quality[best];
    const double* best_chol = chol.data() + best * k;
    detail::parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        if (picked[i]) continue;
        const double lij = best_quality * quality[i] *
                           detail::dot_f32(best_row, base + i * d, d);
        const double cross =
            detail::dot_f64(best_chol, chol.data() + i * k, step);
        const double e = (lij - cross) / diag;
        chol[i * k + step] = e;
        d2[i] -= e * e;
      }
    });
    chol[best * k + step] = diag;
  }

  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {detail::finalize_vertex_report(pool, relevance, params, trace.order,
                                         k, dt),
          trace};
}

}  // namespace dksel
