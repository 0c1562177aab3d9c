// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "dksel/core.hpp"

namespace dksel::oracle {

// Exhaustive and dense-matrix reference implementations for tiny instances.
// Everything here favors directness over speed, uses its own plain scalar
// accumulation (independent of the optimized kernels it cross-checks), and is
// guarded to sizes where brute force stays affordable.

inline constexpr double kMaxSubsets = 1e6;
inline constexpr std::size_t kMaxDenseRows = 256;

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > 1e18) return c;  // far beyond any guard; stop growing
  }
  return c;
}

namespace detail_oracle {

inline double plain_dot(const float* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double plain_dot_ff(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

inline void check_instance(const EmbeddingMatrix& pool,
                           std::span<const float> relevance,
                           const SelectParams& params) {
  if (relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  if (params.k < 1 || params.k > pool.n)
    raise(Errc::BadParams, "k out of range");
  if (!(params.theta >= 0.0 && params.theta <= 1.0))
    raise(Errc::BadParams, "theta out of range");
  if (!std::isfinite(params.lambda))
    raise(Errc::BadParams, "lambda must be finite");
}

}  // namespace detail_oracle

/// n-by-n Gram matrix W = E E^T, row-major. Guarded to tiny pools.
inline std::vector<double> dense_gram(const EmbeddingMatrix& pool) {
  if (pool.n > kMaxDenseRows)
    raise(Errc::TooLarge, "dense Gram matrix limited to n <= 256");
  std::vector<double> gram(pool.n * pool.n);
  for (std::size_t i = 0; i < pool.n; ++i)
    for (std::size_t j = 0; j < pool.n; ++j)
      gram[i * pool.n + j] = detail_oracle::plain_dot_ff(
          pool.data.data() + i * pool.d, pool.data.data() + j * pool.d,
          pool.d);
  return gram;
}

/// Reference objective that materializes W and evaluates
/// theta*(k-1)*c^T x + (1-theta)*x^T(lambda I - W)x with explicit loops.
inline double dense_objective(const EmbeddingMatrix& pool,
                              std::span<const float> relevance,
                              std::span<const double> x,
                              const SelectParams& params) {
  detail_oracle::check_instance(pool, relevance, params);
  if (x.size() != pool.n)
    raise(Errc::DimensionMismatch, "selection length != pool size");
  const auto gram = dense_gram(pool);
  double linear = 0.0;
  for (std::size_t i = 0; i < pool.n; ++i)
    linear += static_cast<double>(relevance[i]) * x[i];
  double quad = 0.0;
  for (std::size_t i = 0; i < pool.n; ++i) {
    quad += params.lambda * x[i] * x[i];
    for (std::size_t j = 0; j < pool.n; ++j)
      quad -= x[i] * gram[i * pool.n + j] * x[j];
  }
  const double km1 = static_cast<double>(params.k) - 1.0;
  return params.theta * km1 * linear + (1.0 - params.theta) * quad;
}

/// Reference curvature d^T (2(1-theta)(lambda I - W)) d with explicit W.
inline double dense_curvature(const EmbeddingMatrix& pool,
                              std::span<const double> direction,
                              const SelectParams& params) {
  if (direction.size() != pool.n)
    raise(Errc::DimensionMismatch, "direction length != pool size");
  const auto gram = dense_gram(pool);
  double quad = 0.0;
  for (std::size_t i = 0; i < pool.n; ++i) {
    quad += params.lambda * direction[i] * direction[i];
    for (std::size_t j = 0; j < pool.n; ++j)
      quad -= direction[i] * gram[i * pool.n + j] * direction[j];
  }
  return 2.0 * (1.0 - params.theta) * quad;
}

/// Everything brute force learned about an instance.
struct ExhaustiveResult {
  std::vector<Index> best_set;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<Index>> local_maxima;
  std::vector<std::pair<std::vector<Index>, double>> value_table;
};

struct BruteForceOptions {
  bool enumerate_local_maxima = true;
  bool keep_value_table = false;
};

namespace detail_oracle {

struct EnumState {
  const EmbeddingMatrix* pool;
  std::span<const float> relevance;
  const SelectParams* params;
  const BruteForceOptions* opts;
  ExhaustiveResult* out;
  std::vector<double> level_sums;   // (k+1) stacked d-vectors of partial E^T x
  std::vector<double> level_c;      // partial relevance mass per level
  std::vector<Index> chosen;
  std::vector<char> mask;
};

inline void visit_leaf(EnumState& st) {
  const auto& p = *st.params;
  const std::size_t k = p.k;
  const std::size_t d = st.pool->d;
  const double* u = st.level_sums.data() + k * d;
  double unorm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) unorm2 += u[j] * u[j];
  const double km1 = static_cast<double>(k) - 1.0;
  const double value =
      p.theta * km1 * st.level_c[k] +
      (1.0 - p.theta) * (p.lambda * static_cast<double>(k) - unorm2);

  if (value > st.out->best_value) {
    st.out->best_value = value;
    st.out->best_set = st.chosen;
  }
  if (st.opts->keep_value_table)
    st.out->value_table.emplace_back(st.chosen, value);

  if (st.opts->enumerate_local_maxima) {
    const std::size_t n = st.pool->n;
    const double lin = p.theta * km1;
    const double quad = 2.0 * (1.0 - p.theta);
    double min_sel = std::numeric_limits<double>::infinity();
    double max_unsel = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ev = plain_dot(st.pool->data.data() + i * d, u, d);
      const double gi = lin * static_cast<double>(st.relevance[i]) +
                        quad * (p.lambda * (st.mask[i] ? 1.0 : 0.0) - ev);
      scale = std::max(scale, std::abs(gi));
      if (st.mask[i])
        min_sel = std::min(min_sel, gi);
      else
        max_unsel = std::max(max_unsel, gi);
    }
    const double gap = (k == n) ? std::numeric_limits<double>::infinity()
                                : min_sel - max_unsel;
    if (gap > 1e-7 * std::max(1.0, scale))
      st.out->local_maxima.push_back(st.chosen);
  }
}

inline void enumerate(EnumState& st, std::size_t next, std::size_t depth) {
  const std::size_t n = st.pool->n;
  const std::size_t k = st.params->k;
  const std::size_t d = st.pool->d;
  if (depth == k) {
    visit_leaf(st);
    return;
  }
  for (std::size_t i = next; i + (k - depth) <= n; ++i) {
    const double* parent = st.level_sums.data() + depth * d;
    double* child = st.level_sums.data() + (depth + 1) * d;
    const float* row = st.pool->data.data() + i * d;
    for (std::size_t j = 0; j < d; ++j)
      child[j] = parent[j] + static_cast<double>(row[j]);
    st.level_c[depth + 1] =
        st.level_c[depth] + static_cast<double>(st.relevance[i]);
    st.chosen.push_back(static_cast<Index>(i));
    st.mask[i] = 1;
    enumerate(st, i + 1, depth + 1);
    st.mask[i] = 0;
    st.chosen.pop_back();
  }
}

}  // namespace detail_oracle

/// Exact optimum over all C(n, k) integral points, enumerated depth-first in
/// lexicographic order with per-level partial sums (one row added per level,
/// no cancellation). On the binary feasible set the lambda shift contributes
/// the constant lambda*k, so the shifted and unshifted problems share their
/// argmax; the reported value is the shifted one.
inline ExhaustiveResult brute_force_ccbqp(const EmbeddingMatrix& pool,
                                          std::span<const float> relevance,
                                          const SelectParams& params,
                                          const BruteForceOptions& opts = {}) {
  detail_oracle::check_instance(pool, relevance, params);
  const double count = binomial(pool.n, params.k);
  if (count > kMaxSubsets)
    raise(Errc::TooLarge,
          "C(n, k) exceeds the brute-force guard of 1e6 subsets");
  if (opts.enumerate_local_maxima &&
      count * static_cast<double>(pool.n) > 2e7)
    raise(Errc::TooLarge,
          "local-maxima enumeration limited to C(n,k)*n <= 2e7");

  ExhaustiveResult result;
  detail_oracle::EnumState st{
      &pool,
      relevance,
      &params,
      &opts,
      &result,
      std::vector<double>((params.k + 1) * pool.d, 0.0),
      std::vector<double>(params.k + 1, 0.0),
      {},
      std::vector<char>(pool.n, 0)};
  st.chosen.reserve(params.k);
  detail_oracle::enumerate(st, 0, 0);
  return result;
}

/// Max over a regular grid on the feasible polytope of the relaxed objective,
/// minus the exact integral optimum. Non-positive (up to float noise) exactly
/// when the relaxation is tight at this lambda; the grid contains every
/// integral point, so a strictly positive value certifies a fractional point
/// beating all vertices.
inline double tightness_gap(const EmbeddingMatrix& pool,
                            std::span<const float> relevance,
                            const SelectParams& params, double grid_step) {
  detail_oracle::check_instance(pool, relevance, params);
  if (pool.n > 8)
    raise(Errc::TooLarge, "polytope grid search limited to n <= 8");
  if (!(grid_step > 0.0 && grid_step <= 1.0))
    raise(Errc::BadParams, "grid step must lie in (0, 1]");
  const std::size_t units = static_cast<std::size_t>(std::lround(1.0 / grid_step));
  const double step = 1.0 / static_cast<double>(units);
  const std::size_t n = pool.n;
  const std::size_t d = pool.d;
  const std::size_t total = params.k * units;

  // Per-level partial sums, one slab per coordinate position.
  std::vector<double> level_sums((n + 1) * d, 0.0);
  std::vector<double> level_c(n + 1, 0.0);
  std::vector<double> level_xx(n + 1, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  const double km1 = static_cast<double>(params.k) - 1.0;

  auto recurse = [&](auto&& self, std::size_t pos,
                     std::size_t remaining) -> void {
    if (pos == n) {
      if (remaining != 0) return;
      const double* u = level_sums.data() + n * d;
      double unorm2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) unorm2 += u[j] * u[j];
      const double value =
          params.theta * km1 * level_c[n] +
          (1.0 - params.theta) * (params.lambda * level_xx[n] - unorm2);
      best = std::max(best, value);
      return;
    }
    const std::size_t slots_after = n - pos - 1;
    const std::size_t lo =
        remaining > slots_after * units ? remaining - slots_after * units : 0;
    const std::size_t hi = std::min(units, remaining);
    const double* parent = level_sums.data() + pos * d;
    double* child = level_sums.data() + (pos + 1) * d;
    const float* row = pool.data.data() + pos * d;
    for (std::size_t m = lo; m <= hi; ++m) {
      const double xi = static_cast<double>(m) * step;
      for (std::size_t j = 0; j < d; ++j)
        child[j] = parent[j] + xi * static_cast<double>(row[j]);
      level_c[pos + 1] =
          level_c[pos] + xi * static_cast<double>(relevance[pos]);
      level_xx[pos + 1] = level_xx[pos] + xi * xi;
      self(self, pos + 1, remaining - m);
    }
  };
  recurse(recurse, 0, total);

  BruteForceOptions opts;
  opts.enumerate_local_maxima = false;
  const double integral_best =
      brute_force_ccbqp(pool, relevance, params, opts).best_value;
  return best - integral_best;
}

/// Sound falsifier for local maximality at a vertex: checks the directional
/// derivative (and curvature at first-order ties) along every single swap and
/// along `samples` random feasible fractional directions. Cannot prove
/// maximality over the full continuum, but any failure is a real ascent
/// direction.
inline bool neighborhood_local_max(const EmbeddingMatrix& pool,
                                   std::span<const float> relevance,
                                   std::span<const Index> selected,
                                   const SelectParams& params,
                                   std::size_t samples = 200,
                                   std::uint64_t seed = 1234) {
  detail_oracle::check_instance(pool, relevance, params);
  const std::size_t n = pool.n;
  const std::size_t d = pool.d;
  std::vector<char> mask(n, 0);
  for (Index i : selected) mask[i] = 1;

  std::vector<double> u(d, 0.0);
  for (Index i : selected)
    for (std::size_t j = 0; j < d; ++j)
      u[j] += static_cast<double>(pool.data[i * d + j]);

  const double km1 = static_cast<double>(params.k) - 1.0;
  const double lin = params.theta * km1;
  const double quad = 2.0 * (1.0 - params.theta);
  std::vector<double> grad(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ev =
        detail_oracle::plain_dot(pool.data.data() + i * d, u.data(), d);
    grad[i] = lin * static_cast<double>(relevance[i]) +
              quad * (params.lambda * (mask[i] ? 1.0 : 0.0) - ev);
    scale = std::max(scale, std::abs(grad[i]));
  }
  const double tol = 1e-9 * std::max(1.0, scale);

  // Single swaps: leave j (selected), enter i (unselected).
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) continue;
    for (Index j : selected) {
      const double slope = grad[i] - grad[j];
      if (slope > tol) return false;
      if (std::abs(slope) <= tol) {
        const double wij = detail_oracle::plain_dot_ff(
            pool.data.data() + i * d, pool.data.data() + j * d, d);
        const double curvature =
            2.0 * (1.0 - params.theta) * (params.lambda - 1.0 + wij);
        if (curvature > tol) return false;
      }
    }
  }

  // Random fractional feasible directions: mass leaves the selected set and
  // enters the complement.
  if (selected.size() == n) return true;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> dir(n);
  for (std::size_t s = 0; s < samples; ++s) {
    double out_mass = 0.0, in_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = unit(rng);
      dir[i] = mask[i] ? -w : w;
      (mask[i] ? out_mass : in_mass) += w;
    }
    for (std::size_t i = 0; i < n; ++i)
      dir[i] /= (dir[i] < 0.0 ? out_mass : in_mass);
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += grad[i] * dir[i];
    if (slope > tol) return false;
    if (std::abs(slope) <= tol) {
      std::vector<double> proj(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (dir[i] == 0.0) continue;
        const float* row = pool.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j)
          proj[j] += dir[i] * static_cast<double>(row[j]);
      }
      double dir2 = 0.0, proj2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) dir2 += dir[i] * dir[i];
      for (std::size_t j = 0; j < d; ++j) proj2 += proj[j] * proj[j];
      const double curvature =
          2.0 * (1.0 - params.theta) * (params.lambda * dir2 - proj2);
      if (curvature > tol) return false;
    }
  }
  return true;
}

}  // namespace dksel::oracle
