// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dksel/core.hpp"

namespace dksel {

// Relaxed objective over the polytope { x in [0,1]^n : 1^T x = k }:
//
//   f(x) = theta*(k-1)*c^T x + (1-theta) * x^T (lambda*I - E E^T) x
//
// The n-by-n Gram matrix is never materialized: with v = E^T x the quadratic
// part reduces to lambda*|x|^2 - |v|^2, so evaluation is O(n + d) given v and
// the gradient costs one n-by-d matrix-vector product.

/// One-dimensional slice of the objective along a direction:
/// f(x + g*dir) = base_value + g*delta + 0.5*g^2*curvature for every step g.
struct DirectionalQuadratic {
  double base_value = 0.0;  // f(x)
  double delta = 0.0;       // <grad f(x), dir>
  double curvature = 0.0;   // dir^T Hessian dir
};

/// Coordinate swap: `enter` moves toward 1 and `leave` toward 0 by `step`.
struct SwapDirection {
  Index enter = 0;
  Index leave = 0;
  double step = 0.0;
};

/// v = E^T x = sum_i x_i e_i. Rows are visited in ascending order so the
/// accumulation is deterministic.
inline std::vector<double> weighted_row_sum(const EmbeddingMatrix& pool,
                                            std::span<const double> x) {
  if (x.size() != pool.n)
    raise(Errc::DimensionMismatch, "selection length != pool size");
  std::vector<double> sum(pool.d, 0.0);
  const std::size_t d = pool.d;
  for (std::size_t i = 0; i < pool.n; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const float* row = pool.data.data() + i * d;
    for (std::size_t j = 0; j < d; ++j)
      sum[j] += xi * static_cast<double>(row[j]);
  }
  return sum;
}

inline double cache_tolerance(std::size_t d) {
  return 1e-5 * std::sqrt(static_cast<double>(d));
}

/// f(x) given the cached weighted sum v = E^T x.
inline double eval_objective_cached(std::span<const float> relevance,
                                    std::span<const double> x,
                                    std::span<const double> weighted_sum,
                                    const SelectParams& params) {
  const double cx =
      detail::dot_f32_f64(relevance.data(), x.data(), x.size());
  const double xx = detail::squared_norm_f64(x.data(), x.size());
  const double vv =
      detail::squared_norm_f64(weighted_sum.data(), weighted_sum.size());
  const double km1 = static_cast<double>(params.k) - 1.0;
  return params.theta * km1 * cx +
         (1.0 - params.theta) * (params.lambda * xx - vv);
}

inline double eval_objective(const EmbeddingMatrix& pool,
                             std::span<const float> relevance,
                             std::span<const double> x,
                             const SelectParams& params) {
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  const auto ws = weighted_row_sum(pool, x);
  return eval_objective_cached(relevance, x, ws, params);
}

/// grad f(x) = theta*(k-1)*c + 2*(1-theta)*(lambda*x - E v).
/// The caller owns the cache contract; pass verify_cache to have v checked
/// against a fresh E^T x (throws StaleCache beyond tolerance).
inline std::vector<double> eval_gradient(const EmbeddingMatrix& pool,
                                         std::span<const float> relevance,
                                         std::span<const double> x,
                                         std::span<const double> weighted_sum,
                                         const SelectParams& params,
                                         bool verify_cache = false) {
  if (relevance.size() != pool.n || x.size() != pool.n ||
      weighted_sum.size() != pool.d)
    raise(Errc::DimensionMismatch, "eval_gradient: input sizes disagree");
  if (verify_cache) {
    const auto fresh = weighted_row_sum(pool, x);
    double dev = 0.0;
    for (std::size_t j = 0; j < pool.d; ++j)
      dev = std::max(dev, std::abs(fresh[j] - weighted_sum[j]));
    if (dev > cache_tolerance(pool.d))
      raise(Errc::StaleCache, "weighted-sum cache deviates from E^T x");
  }
  std::vector<double> grad(pool.n);
  const double lin = params.theta * (static_cast<double>(params.k) - 1.0);
  const double quad = 2.0 * (1.0 - params.theta);
  const double lambda = params.lambda;
  const float* base = pool.data.data();
  const double* ws = weighted_sum.data();
  const float* c = relevance.data();
  const double* xp = x.data();
  const std::size_t d = pool.d;
  detail::parallel_chunks(pool.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double ev = detail::dot_f32_f64(base + i * d, ws, d);
      grad[i] = lin * static_cast<double>(c[i]) + quad * (lambda * xp[i] - ev);
    }
  });
  return grad;
}

/// Exact quadratic slice along an arbitrary direction (dense route; the
/// solver's sparse-direction variant lives in fw_solver.hpp).
inline DirectionalQuadratic directional_quadratic(
    const EmbeddingMatrix& pool, std::span<const float> relevance,
    std::span<const double> x, std::span<const double> grad,
    std::span<const double> direction, const SelectParams& params) {
  if (grad.size() != pool.n || direction.size() != pool.n)
    raise(Errc::DimensionMismatch, "directional_quadratic: sizes disagree");
  DirectionalQuadratic dq;
  dq.base_value = eval_objective(pool, relevance, x, params);
  dq.delta = detail::dot_f64(grad.data(), direction.data(), pool.n);
  const auto dsum = weighted_row_sum(pool, direction);
  const double dir2 = detail::squared_norm_f64(direction.data(), pool.n);
  const double proj2 = detail::squared_norm_f64(dsum.data(), dsum.size());
  dq.curvature = 2.0 * (1.0 - params.theta) * (params.lambda * dir2 - proj2);
  return dq;
}

/// Both sides of the exact swap expansion: lhs = f(x + step*(e_i - e_j)) - f(x)
/// evaluated directly, rhs = step*(grad_i - grad_j) +
/// step^2 * 2*(1-theta)*(lambda - 1 + w_ij). Returned as a pair for tests.
inline std::pair<double, double> swap_taylor_check(
    const EmbeddingMatrix& pool, std::span<const float> relevance,
    std::span<const double> x, const SwapDirection& swap,
    const SelectParams& params) {
  if (swap.enter == swap.leave)
    raise(Errc::InfeasibleSwap, "swap endpoints must differ");
  if (swap.enter >= pool.n || swap.leave >= pool.n)
    raise(Errc::InfeasibleSwap, "swap index out of range");
  if (!(swap.step >= 0.0))
    raise(Errc::InfeasibleSwap, "swap step must be non-negative");
  constexpr double kSlack = 1e-12;
  if (x[swap.enter] + swap.step > 1.0 + kSlack ||
      x[swap.leave] - swap.step < -kSlack)
    raise(Errc::InfeasibleSwap, "swap leaves the unit box");

  SelectionVector moved(x.begin(), x.end());
  moved[swap.enter] += swap.step;
  moved[swap.leave] -= swap.step;
  const double lhs = eval_objective(pool, relevance, moved, params) -
                     eval_objective(pool, relevance, x, params);

  const auto ws = weighted_row_sum(pool, x);
  const double lin = params.theta * (static_cast<double>(params.k) - 1.0);
  const double quad = 2.0 * (1.0 - params.theta);
  auto grad_at = [&](Index i) {
    const double ev =
        detail::dot_f32_f64(pool.data.data() + i * pool.d, ws.data(), pool.d);
    return lin * static_cast<double>(relevance[i]) +
           quad * (params.lambda * x[i] - ev);
  };
  const double slope = grad_at(swap.enter) - grad_at(swap.leave);
  const double wij = detail::dot_f32(pool.data.data() + swap.enter * pool.d,
                                     pool.data.data() + swap.leave * pool.d,
                                     pool.d);
  const double rhs =
      swap.step * slope +
      swap.step * swap.step * 2.0 * (1.0 - params.theta) *
          (params.lambda - 1.0 + wij);
  return {lhs, rhs};
}

}  // namespace dksel
