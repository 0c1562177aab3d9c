// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dksel/detail/math.hpp"
#include "dksel/detail/parallel.hpp"

namespace dksel {

enum class Errc {
  ZeroRow,
  NonFinite,
  DimensionMismatch,
  BadParams,
  StaleCache,
  NegativeGap,
  InfeasibleSwap,
  NotIntegral,
  TooLarge,
  EmptyGold,
  TooFewItems,
  BadMagic,
  TruncatedFile,
  BadFile,
};

// Validation errors are caller mistakes (bad inputs, bad parameters, size
// guards); the remaining codes indicate solver-side bookkeeping bugs.
inline bool is_validation_error(Errc code) {
  switch (code) {
    case Errc::StaleCache:
    case Errc::NegativeGap:
      return false;
    default:
      return true;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Errc code() const { return code_; }
  bool is_validation() const { return is_validation_error(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

using Index = std::uint32_t;

/// Candidate pool: n unit-norm rows of dimension d, row-major float32.
/// Immutable after validation; safe to share across concurrent solves.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
      : n(rows), d(dim), data(std::move(values)) {}

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data.data() + i * d, d);
  }
  float* row_mut(std::size_t i) { return data.data() + i * d; }
};

struct NormalizationStats {
  std::size_t rescaled = 0;  // rows whose norm was off before rescaling
};

/// Rescales every row to unit norm. Rows already within 1e-7 of unit are left
/// bit-identical so that save -> load round trips are stable.
inline EmbeddingMatrix validate_pool(EmbeddingMatrix pool,
                                     NormalizationStats* stats = nullptr) {
  if (pool.n == 0 || pool.d == 0)
    raise(Errc::BadParams, "pool must have n >= 1 and d >= 1");
  if (pool.data.size() != pool.n * pool.d)
    raise(Errc::BadParams, "pool buffer size does not match n*d");
  std::size_t rescaled = 0;
  for (std::size_t i = 0; i < pool.n; ++i) {
    float* row = pool.row_mut(i);
    for (std::size_t j = 0; j < pool.d; ++j) {
      if (!std::isfinite(row[j]))
        raise(Errc::NonFinite, "non-finite entry in row " + std::to_string(i));
    }
    const double norm = std::sqrt(detail::squared_norm_f32(row, pool.d));
    if (norm < 1e-6)
      raise(Errc::ZeroRow, "row " + std::to_string(i) + " has near-zero norm");
    if (std::abs(norm - 1.0) > 1e-7) {
      const double inv = 1.0 / norm;
      for (std::size_t j = 0; j < pool.d; ++j)
        row[j] = static_cast<float>(row[j] * inv);
      ++rescaled;
    }
  }
  if (stats != nullptr) stats->rescaled = rescaled;
  return pool;
}

/// c_i = <e_i, q>, the cosine relevance of each pool row to a unit query.
inline std::vector<float> relevance_from_query(const EmbeddingMatrix& pool,
                                               std::span<const float> query) {
  if (query.size() != pool.d)
    raise(Errc::DimensionMismatch, "query dimension " +
                                       std::to_string(query.size()) +
                                       " != pool dimension " +
                                       std::to_string(pool.d));
  for (float v : query)
    if (!std::isfinite(v)) raise(Errc::NonFinite, "non-finite query entry");
  std::vector<float> relevance(pool.n);
  const float* base = pool.data.data();
  const float* q = query.data();
  const std::size_t d = pool.d;
  detail::parallel_chunks(pool.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      relevance[i] = static_cast<float>(detail::dot_f32(base + i * d, q, d));
  });
  return relevance;
}

/// Query-side inputs: relevance scores plus optional ground-truth evidence.
/// The embedding may be empty when relevance is supplied externally.
struct QueryContext {
  std::string id;
  std::vector<float> embedding;
  std::vector<float> relevance;
  std::vector<Index> gold;
};

inline void validate_query_context(const QueryContext& ctx,
                                   const EmbeddingMatrix& pool) {
  if (ctx.relevance.size() != pool.n)
    raise(Errc::DimensionMismatch, "relevance length != pool size");
  for (float c : ctx.relevance) {
    if (!std::isfinite(c) || std::abs(c) > 1.0f + 1e-5f)
      raise(Errc::BadParams, "relevance entries must be finite and in [-1, 1]");
  }
  if (!ctx.embedding.empty() && ctx.embedding.size() != pool.d)
    raise(Errc::DimensionMismatch, "query embedding dimension != pool dimension");
  for (Index g : ctx.gold)
    if (g >= pool.n) raise(Errc::BadParams, "gold index out of range");
}

inline QueryContext make_query_context(const EmbeddingMatrix& pool,
                                       std::span<const float> query,
                                       std::string id = {},
                                       std::vector<Index> gold = {}) {
  if (query.size() != pool.d)
    raise(Errc::DimensionMismatch, "query dimension != pool dimension");
  QueryContext ctx;
  ctx.id = std::move(id);
  ctx.embedding.assign(query.begin(), query.end());
  for (float v : ctx.embedding)
    if (!std::isfinite(v)) raise(Errc::NonFinite, "non-finite query entry");
  const double norm =
      std::sqrt(detail::squared_norm_f32(ctx.embedding.data(), pool.d));
  if (norm < 1e-6) raise(Errc::ZeroRow, "query embedding has near-zero norm");
  if (std::abs(norm - 1.0) > 1e-7) {
    const double inv = 1.0 / norm;
    for (float& v : ctx.embedding) v = static_cast<float>(v * inv);
  }
  ctx.relevance = relevance_from_query(pool, ctx.embedding);
  ctx.gold = std::move(gold);
  std::sort(ctx.gold.begin(), ctx.gold.end());
  validate_query_context(ctx, pool);
  return ctx;
}

enum class InitKind { TopKRelevance, Uniform };

/// Solver knobs shared by every selector.
struct SelectParams {
  std::size_t k = 10;
  double theta = 0.5;   // relevance/diversity trade-off in [0, 1]
  double lambda = 2.0;  // diagonal shift; >= 2 keeps the relaxation tight
  std::size_t max_iters = 1000;
  double gap_tol = 1e-9;  // relative stopping tolerance on the FW gap
  std::size_t recompute_period = 50;  // iterations between cache rebuilds
  InitKind init = InitKind::TopKRelevance;
  bool allow_lambda_below_two = false;  // experiments only

  void validate(std::size_t n) const {
    if (k < 1) raise(Errc::BadParams, "k must be at least 1");
    if (k > n)
      raise(Errc::BadParams, "k = " + std::to_string(k) + " exceeds pool size " +
                                 std::to_string(n));
    if (!(theta >= 0.0 && theta <= 1.0))
      raise(Errc::BadParams, "theta must lie in [0, 1]");
    if (!std::isfinite(lambda)) raise(Errc::BadParams, "lambda must be finite");
    if (lambda < 2.0) {
      if (!allow_lambda_below_two)
        raise(Errc::BadParams,
              "lambda < 2 voids integrality guarantees; set "
              "allow_lambda_below_two to override");
      std::fprintf(stderr,
                   "dksel: warning: lambda=%.6g < 2, integral outputs are no "
                   "longer guaranteed\n",
                   lambda);
    }
    if (max_iters < 1) raise(Errc::BadParams, "max_iters must be at least 1");
    if (!(gap_tol > 0.0)) raise(Errc::BadParams, "gap_tol must be positive");
    if (recompute_period < 1)
      raise(Errc::BadParams, "recompute_period must be at least 1");
  }
};

/// Point on the polytope { x in [0,1]^n : sum x = k }.
using SelectionVector = std::vector<double>;

inline void validate_selection(const SelectionVector& x, std::size_t k) {
  double sum = 0.0;
  for (double xi : x) {
    if (!(xi >= -1e-9 && xi <= 1.0 + 1e-9))
      raise(Errc::BadParams, "selection coordinate outside [0, 1]");
    sum += xi;
  }
  if (std::abs(sum - static_cast<double>(k)) > 1e-6 * static_cast<double>(k))
    raise(Errc::BadParams, "selection mass differs from k");
}

inline bool is_integral(std::span<const double> x, double tol = 1e-6) {
  for (double xi : x) {
    if (std::min(std::abs(xi), std::abs(1.0 - xi)) > tol) return false;
  }
  return true;
}

inline SelectionVector selection_from_indices(std::size_t n,
                                              std::span<const Index> indices) {
  SelectionVector x(n, 0.0);
  for (Index i : indices) {
    if (i >= n) raise(Errc::BadParams, "selection index out of range");
    x[i] = 1.0;
  }
  return x;
}

/// Largest-k indices under (value descending, index ascending); the returned
/// list is sorted ascending. The comparator is a strict total order, so the
/// selected set is deterministic for any tie pattern.
template <class T>
inline std::vector<Index> top_k_indices(std::span<const T> values,
                                        std::size_t k) {
  const std::size_t n = values.size();
  if (k > n) raise(Errc::BadParams, "top_k_indices: k exceeds n");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  auto better = [&values](Index a, Index b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  if (k < n) {
    std::nth_element(order.begin(), order.begin() + k, order.end(), better);
    order.resize(k);
  }
  std::sort(order.begin(), order.end());
  return order;
}

/// Outcome of one selection call.
struct SolveReport {
  std::vector<Index> selected;  // k indices, ascending
  double objective = 0.0;
  std::size_t iterations = 0;
  double final_gap = 0.0;
  bool integral = false;
  bool local_max_certified = false;
  double grad_gap = 0.0;  // min selected minus max unselected gradient entry
  bool hit_iteration_cap = false;
  double wall_time_s = 0.0;  // selection proper, excluding report diagnostics
};

}  // namespace dksel
