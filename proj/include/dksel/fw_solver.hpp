// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dksel/core.hpp"
#include "dksel/objective.hpp"

namespace dksel {

// Frank-Wolfe with exact line search over { x in [0,1]^n : 1^T x = k }.
//
// Each iteration performs one n-by-d gradient product, one O(n) top-k
// selection, and an O(k*d) row gather for the direction terms, so the
// per-iteration cost is O(n*d) independent of k. The step size maximizing the
// quadratic slice has a closed form, and a full step (gamma = 1) lands
// bit-exactly on the chosen vertex, which is what makes local convergence
// exact rather than asymptotic.

/// Per-iteration solver state, exposed to the iteration hook.
struct FwState {
  SelectionVector x;
  std::vector<double> weighted_sum;  // cache of E^T x
  std::size_t iteration = 0;
  double last_gap = 0.0;
  double objective = 0.0;
};

/// First-order classification of an integral vertex.
struct VertexCertificate {
  double grad_gap = 0.0;  // min over selected minus max over unselected
  bool is_local_max = false;
  bool is_strict_saddle = false;
};

/// Indicator of the k gradient coordinates with the largest values;
/// ties broken toward the lowest index.
inline std::vector<Index> lmo_topk(std::span<const double> grad,
                                   std::size_t k) {
  return top_k_indices(grad, k);
}

/// Closed-form maximizer over [0, 1] of base + g*delta + 0.5*g^2*curvature.
/// Requires a non-negative gap; a clearly negative delta means the caller's
/// bookkeeping broke.
inline double exact_line_search(const DirectionalQuadratic& dq) {
  const double tol = 1e-9 * std::max(1.0, std::abs(dq.base_value));
  if (dq.delta < -tol)
    raise(Errc::NegativeGap, "negative Frank-Wolfe gap: stale bookkeeping");
  const double gap = std::max(dq.delta, 0.0);
  if (dq.curvature >= 0.0) return 1.0;
  return std::min(1.0, gap / (-dq.curvature));
}

/// E^T s for a sparse indicator: gathers and sums the k named rows in the
/// given order (fixed sequential accumulation, independent of worker count).
inline std::vector<double> gather_rows_sum(const EmbeddingMatrix& pool,
                                           std::span<const Index> rows) {
  std::vector<double> sum(pool.d, 0.0);
  const std::size_t d = pool.d;
  for (Index r : rows) {
    if (r >= pool.n) raise(Errc::BadParams, "row index out of range");
    const float* row = pool.data.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) sum[j] += static_cast<double>(row[j]);
  }
  return sum;
}

/// E^T (s - x) in O(k*d) via the decomposition E^T s - v.
inline std::vector<double> sparse_etd(const EmbeddingMatrix& pool,
                                      std::span<const Index> s,
                                      std::span<const double> weighted_sum) {
  if (weighted_sum.size() != pool.d)
    raise(Errc::DimensionMismatch, "weighted_sum length != pool dimension");
  auto sum = gather_rows_sum(pool, s);
  for (std::size_t j = 0; j < pool.d; ++j) sum[j] -= weighted_sum[j];
  return sum;
}

namespace detail {

struct VertexDiagnostics {
  VertexCertificate cert;
  double fw_gap = 0.0;  // gap toward the best vertex of the gradient
};

inline VertexDiagnostics vertex_diagnostics(const EmbeddingMatrix& pool,
                                            std::span<const float> relevance,
                                            std::span<const Index> selected,
                                            const SelectParams& params) {
  const std::size_t n = pool.n;
  std::vector<char> picked(n, 0);
  for (Index i : selected) picked[i] = 1;
  const auto ws = gather_rows_sum(pool, selected);

  std::vector<double> grad(n);
  const double lin = params.theta * (static_cast<double>(params.k) - 1.0);
  const double quad = 2.0 * (1.0 - params.theta);
  const float* base = pool.data.data();
  const std::size_t d = pool.d;
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double ev = dot_f32_f64(base + i * d, ws.data(), d);
      grad[i] = lin * static_cast<double>(relevance[i]) +
                quad * (params.lambda * (picked[i] ? 1.0 : 0.0) - ev);
    }
  });

  double min_sel = std::numeric_limits<double>::infinity();
  double max_unsel = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  double grad_on_sel = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scale = std::max(scale, std::abs(grad[i]));
    if (picked[i]) {
      min_sel = std::min(min_sel, grad[i]);
      grad_on_sel += grad[i];
    } else {
      max_unsel = std::max(max_unsel, grad[i]);
    }
  }

  VertexDiagnostics diag;
  if (selected.size() == n) {
    diag.cert.grad_gap = std::numeric_limits<double>::infinity();
    diag.cert.is_local_max = true;
    return diag;
  }
  diag.cert.grad_gap = min_sel - max_unsel;
  const double cert_tol = 1e-7 * std::max(1.0, scale);
  diag.cert.is_local_max = diag.cert.grad_gap > cert_tol;
  diag.cert.is_strict_saddle = std::abs(diag.cert.grad_gap) <= cert_tol;

  double grad_on_best = 0.0;
  for (Index i : lmo_topk(grad, selected.size())) grad_on_best += grad[i];
  diag.fw_gap = std::max(0.0, grad_on_best - grad_on_sel);
  return diag;
}

}  // namespace detail

/// First-order certificate at an integral vertex given by its support.
inline VertexCertificate certify_selected(const EmbeddingMatrix& pool,
                                          std::span<const float> relevance,
                                          std::span<const Index> selected,
                                          const SelectParams& params) {
  return detail::vertex_diagnostics(pool, relevance, selected, params).cert;
}

/// Same certificate for a full selection vector; rejects fractional input.
inline VertexCertificate certify_vertex(const EmbeddingMatrix& pool,
                                        std::span<const float> relevance,
                                        const SelectionVector& x,
                                        const SelectParams& params) {
  if (x.size() != pool.n)
    raise(Errc::DimensionMismatch, "selection length != pool size");
  std::vector<Index> selected;
  selected.reserve(params.k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - 1.0) <= 1e-6) {
      selected.push_back(static_cast<Index>(i));
    } else if (std::abs(x[i]) > 1e-6) {
      raise(Errc::NotIntegral, "coordinate " + std::to_string(i) +
                                   " is fractional");
    }
  }
  if (selected.size() != params.k)
    raise(Errc::NotIntegral, "support size differs from k");
  return certify_selected(pool, relevance, selected, params);
}

/// Re-certifies a vertex under a larger diagonal shift. A local maximizer is
/// expected to remain one for any lambda2 >= lambda.
inline bool monotonicity_check(const EmbeddingMatrix& pool,
                               std::span<const float> relevance,
                               const SelectionVector& x,
                               const SelectParams& params, double lambda2) {
  if (lambda2 < params.lambda)
    raise(Errc::BadParams, "lambda2 must be at least params.lambda");
  SelectParams shifted = params;
  shifted.lambda = lambda2;
  return certify_vertex(pool, relevance, x, shifted).is_local_max;
}

using IterationHook = std::function<void(const FwState&)>;

namespace detail {

inline SolveReport full_set_report(const EmbeddingMatrix& pool,
                                   std::span<const float> relevance,
                                   const SelectParams& params,
                                   std::chrono::steady_clock::time_point t0) {
  SolveReport report;
  report.selected.resize(pool.n);
  std::iota(report.selected.begin(), report.selected.end(), Index{0});
  report.integral = true;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const auto x = selection_from_indices(pool.n, report.selected);
  report.objective = eval_objective(pool, relevance, x, params);
  const auto diag =
      vertex_diagnostics(pool, relevance, report.selected, params);
  report.local_max_certified = diag.cert.is_local_max;
  report.grad_gap = diag.cert.grad_gap;
  report.final_gap = diag.fw_gap;
  return report;
}

}  // namespace detail

/// Runs the Frank-Wolfe loop to a stationary point (relative gap below
/// gap_tol) or to the iteration cap. Hitting the cap is reported, not thrown.
/// The default start is the top-k vertex of the relevance scores; pass `init`
/// or InitKind::Uniform for landscape experiments. `on_iteration`, when set,
/// observes the state after every update.
inline SolveReport solve_fw(const EmbeddingMatrix& pool,
                            std::span<const float> relevance,
                            const SelectParams& params,
                            const SelectionVector* init = nullptr,
                            const IterationHook& on_iteration = {}) {
  params.validate(pool.n);
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = pool.n;
  const std::size_t k = params.k;

  if (k == n) return detail::full_set_report(pool, relevance, params, t0);

  FwState st;
  if (init != nullptr) {
    if (init->size() != n)
      raise(Errc::DimensionMismatch, "init length != pool size");
    validate_selection(*init, k);
    st.x = *init;
  } else if (params.init == InitKind::TopKRelevance) {
    st.x = selection_from_indices(n, top_k_indices(relevance, k));
  } else {
    st.x.assign(n, static_cast<double>(k) / static_cast<double>(n));
  }
  st.weighted_sum = weighted_row_sum(pool, st.x);
  st.objective = eval_objective_cached(relevance, st.x, st.weighted_sum, params);

  SolveReport report;
  std::vector<double> etd(pool.d);
  while (true) {
    const auto grad =
        eval_gradient(pool, relevance, st.x, st.weighted_sum, params);
    const auto s = lmo_topk(grad, k);
    const double grad_dot_x = detail::dot_f64(grad.data(), st.x.data(), n);
    double grad_on_s = 0.0;
    for (Index i : s) grad_on_s += grad[i];
    const double gap = grad_on_s - grad_dot_x;
    st.last_gap = gap;
    if (gap <= params.gap_tol * std::max(1.0, std::abs(st.objective))) break;
    if (st.iteration >= params.max_iters) {
      report.hit_iteration_cap = true;
      break;
    }

    auto gathered = gather_rows_sum(pool, s);  // E^T s, O(k*d)
    for (std::size_t j = 0; j < pool.d; ++j)
      etd[j] = gathered[j] - st.weighted_sum[j];  // E^T (s - x)
    // |s - x|^2 = |x|^2 - 2 <s, x> + k
    const double xx = detail::squared_norm_f64(st.x.data(), n);
    double xs = 0.0;
    for (Index i : s) xs += st.x[i];
    const double dir2 = xx - 2.0 * xs + static_cast<double>(k);
    const double proj2 = detail::squared_norm_f64(etd.data(), pool.d);
    const DirectionalQuadratic dq{
        st.objective, gap,
        2.0 * (1.0 - params.theta) * (params.lambda * dir2 - proj2)};
    const double step = exact_line_search(dq);

    if (step == 1.0) {
      // Full step: land exactly on the vertex, cache exactly its row sum.
      std::fill(st.x.begin(), st.x.end(), 0.0);
      for (Index i : s) st.x[i] = 1.0;
      st.weighted_sum = std::move(gathered);
    } else {
      const double keep = 1.0 - step;
      for (std::size_t i = 0; i < n; ++i) st.x[i] *= keep;
      for (Index i : s) st.x[i] = std::min(1.0, st.x[i] + step);
      for (std::size_t j = 0; j < pool.d; ++j)
        st.weighted_sum[j] += step * etd[j];
    }
    ++st.iteration;
    if (st.iteration % params.recompute_period == 0)
      st.weighted_sum = weighted_row_sum(pool, st.x);  // cancel float drift
    st.objective =
        eval_objective_cached(relevance, st.x, st.weighted_sum, params);
    if (on_iteration) on_iteration(st);
  }

  report.iterations = st.iteration;
  report.final_gap = st.last_gap;
  report.integral = is_integral(st.x);
  report.selected = top_k_indices<double>(st.x, k);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  report.objective = eval_objective(pool, relevance, st.x, params);
  if (report.integral) {
    const auto cert =
        certify_selected(pool, relevance, report.selected, params);
    report.local_max_certified = cert.is_local_max;
    report.grad_gap = cert.grad_gap;
  }
  return report;
}

}  // namespace dksel
