// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dksel/fw_solver.hpp"
#include "dksel/objective.hpp"
#include "dksel/oracle.hpp"
#include "support/instances.hpp"

using namespace dksel;

namespace {

SelectParams params_with(std::size_t k, double theta, double lambda = 2.0) {
  SelectParams p;
  p.k = k;
  p.theta = theta;
  p.lambda = lambda;
  return p;
}

}  // namespace

TEST_CASE("brute force on n=k is the full set") {
  std::mt19937_64 rng(131);
  auto pool = dksel_test::random_pool(rng, 5, 4);
  const auto c = dksel_test::random_relevance(rng, 5);
  const auto p = params_with(5, 0.5);
  const auto result = oracle::brute_force_ccbqp(pool, c, p);
  CHECK(result.best_set == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(result.best_value ==
        doctest::Approx(eval_objective(pool, c,
                                       selection_from_indices(5, result.best_set),
                                       p))
            .epsilon(1e-10));
}

TEST_CASE("brute force with theta=1 is top-k") {
  std::mt19937_64 rng(133);
  auto pool = dksel_test::random_pool(rng, 9, 4);
  const auto q = dksel_test::random_unit_query(rng, 4);
  const auto c = relevance_from_query(pool, q);
  const auto result = oracle::brute_force_ccbqp(pool, c, params_with(3, 1.0));
  CHECK(result.best_set == top_k_indices<float>(c, 3));
}

TEST_CASE("brute force rejects oversized instances") {
  std::mt19937_64 rng(135);
  auto pool = dksel_test::random_pool(rng, 64, 4);
  const auto c = dksel_test::random_relevance(rng, 64);
  try {
    (void)oracle::brute_force_ccbqp(pool, c, params_with(16, 0.5));
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooLarge);
  }
}

TEST_CASE("value table is consistent with direct evaluation") {
  std::mt19937_64 rng(137);
  auto pool = dksel_test::random_pool(rng, 7, 4);
  const auto c = dksel_test::random_relevance(rng, 7);
  const auto p = params_with(3, 0.4);
  oracle::BruteForceOptions opts;
  opts.keep_value_table = true;
  const auto result = oracle::brute_force_ccbqp(pool, c, p, opts);
  CHECK(result.value_table.size() == 35);  // C(7,3)
  for (const auto& [subset, value] : result.value_table) {
    const auto x = selection_from_indices(7, subset);
    CHECK(value == doctest::Approx(eval_objective(pool, c, x, p)).epsilon(1e-9));
    // the lambda shift is constant on vertices: f = f_unshifted + (1-t)*l*k
    SelectParams unshifted = p;
    unshifted.lambda = 0.0;
    unshifted.allow_lambda_below_two = true;
    const double expected_shift =
        (1.0 - p.theta) * p.lambda * static_cast<double>(p.k);
    CHECK(value - eval_objective(pool, c, x, unshifted) ==
          doctest::Approx(expected_shift).epsilon(1e-9));
  }
}

TEST_CASE("global optimum appears among the enumerated local maxima") {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 20; ++trial) {
    auto pool = dksel_test::random_pool(rng, 10, 4, 3);
    const auto q = dksel_test::random_unit_query(rng, 4);
    const auto c = relevance_from_query(pool, q);
    const auto p = params_with(3, 0.5);
    const auto result = oracle::brute_force_ccbqp(pool, c, p);
    const bool found =
        std::find(result.local_maxima.begin(), result.local_maxima.end(),
                  result.best_set) != result.local_maxima.end();
    CHECK(found);
  }
}

TEST_CASE("local maxima at lambda=2 stay local maxima at lambda=3") {
  std::mt19937_64 rng(141);
  for (int trial = 0; trial < 10; ++trial) {
    auto pool = dksel_test::random_pool(rng, 9, 4, 3);
    const auto q = dksel_test::random_unit_query(rng, 4);
    const auto c = relevance_from_query(pool, q);
    const auto at2 = oracle::brute_force_ccbqp(pool, c, params_with(3, 0.5, 2.0));
    const auto at3 = oracle::brute_force_ccbqp(pool, c, params_with(3, 0.5, 3.0));
    for (const auto& vertex : at2.local_maxima) {
      const bool still =
          std::find(at3.local_maxima.begin(), at3.local_maxima.end(), vertex) !=
          at3.local_maxima.end();
      CHECK(still);
    }
    CHECK(at3.local_maxima.size() >= at2.local_maxima.size());
  }
}

TEST_CASE("tightness gap is non-positive at lambda=2") {
  std::mt19937_64 rng(143);
  for (int trial = 0; trial < 5; ++trial) {
    auto pool = dksel_test::random_pool(rng, 5, 3, 2);
    const auto q = dksel_test::random_unit_query(rng, 3);
    const auto c = relevance_from_query(pool, q);
    const auto p = params_with(2, 0.5, 2.0);
    const double gap = oracle::tightness_gap(pool, c, p, 0.05);
    CHECK(gap <= 1e-6);
  }
}

TEST_CASE("tightness gap turns positive without the shift") {
  // two near-duplicate highly relevant rows: splitting mass between them
  // beats any vertex once lambda = 0
  std::mt19937_64 rng(145);
  EmbeddingMatrix pool;
  pool.n = 4;
  pool.d = 3;
  pool.data = {1.f,     0.f,    0.f,  //
               0.999f,  0.044f, 0.f,  //
               0.f,     1.f,    0.f,  //
               0.f,     0.f,    1.f};
  pool = validate_pool(std::move(pool));
  const std::vector<float> c{0.95f, 0.95f, 0.2f, 0.1f};
  auto p = params_with(2, 0.2, 0.0);
  p.allow_lambda_below_two = true;
  const double gap = oracle::tightness_gap(pool, c, p, 0.05);
  CHECK(gap > 1e-4);
}

TEST_CASE("tightness grid covers the integral optimum at theta=0") {
  std::mt19937_64 rng(147);
  auto pool = dksel_test::random_pool(rng, 4, 3);
  const auto c = dksel_test::random_relevance(rng, 4);
  const auto p = params_with(2, 0.0, 2.0);
  const double gap = oracle::tightness_gap(pool, c, p, 0.1);
  CHECK(gap <= 1e-6);
  CHECK(gap >= -1e-9);  // grid contains every vertex
}

TEST_CASE("tightness gap rejects large instances") {
  std::mt19937_64 rng(149);
  auto pool = dksel_test::random_pool(rng, 9, 3);
  const auto c = dksel_test::random_relevance(rng, 9);
  CHECK_THROWS_AS(
      (void)oracle::tightness_gap(pool, c, params_with(2, 0.5), 0.1), Error);
}

TEST_CASE("dense objective oracle is guarded") {
  EmbeddingMatrix pool;
  pool.n = 300;
  pool.d = 2;
  pool.data.assign(600, 0.f);
  for (std::size_t i = 0; i < 300; ++i) pool.data[i * 2] = 1.f;
  const std::vector<float> c(300, 0.f);
  const SelectionVector x(300, 0.0);
  CHECK_THROWS_AS((void)oracle::dense_objective(pool, c, x, params_with(2, 0.5)),
                  Error);
}

TEST_CASE("zero-gap vertices admit the exact swap gain of the dichotomy") {
  // Exactly-unit dyadic pools allow constructing a bit-exact gradient tie
  // across the selection boundary; the swap then gains exactly
  // 2*(1-theta)*(lambda - 1 + w_ij).
  std::mt19937_64 rng(151);
  int built = 0;
  for (int trial = 0; trial < 40 && built < 10; ++trial) {
    const std::size_t n = 8, k = 3;
    auto pool = dksel_test::dyadic_pool(rng, n);
    const auto p = params_with(k, 0.5);  // theta*(k-1) = 1 exactly
    const std::vector<Index> subset{0, 1, 2};
    const auto x = selection_from_indices(n, subset);
    const auto ws = weighted_row_sum(pool, x);

    // quadratic part of the gradient at the vertex (exact dyadic arithmetic)
    std::vector<double> quad(n);
    for (std::size_t i = 0; i < n; ++i)
      quad[i] = 2.0 * (1.0 - p.theta) *
                (p.lambda * x[i] -
                 detail::dot_f32_f64(pool.data.data() + i * pool.d, ws.data(),
                                     pool.d));
    // engineer c so grad = target: tie between entering 3 and leaving 2,
    // everything else strictly inside its band
    std::vector<float> c(n);
    const double tie = 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      double target;
      if (i == 2 || i == 3)
        target = tie;
      else if (x[i] == 1.0)
        target = tie + 0.5;
      else
        target = tie - 0.5;
      c[i] = static_cast<float>(target - quad[i]);  // dyadic, exact in float
      if (static_cast<double>(c[i]) != target - quad[i]) { c.clear(); break; }
    }
    if (c.empty()) continue;

    const auto cert = certify_selected(pool, c, subset, p);
    CHECK(cert.is_strict_saddle);
    CHECK(cert.grad_gap == 0.0);

    const auto [lhs, rhs] =
        swap_taylor_check(pool, c, x, SwapDirection{3, 2, 1.0}, p);
    const double wij = dksel_test::naive_dot(pool.row(3), pool.row(2));
    const double expect = 2.0 * (1.0 - p.theta) * (p.lambda - 1.0 + wij);
    CHECK(std::abs(lhs - expect) <= 1e-8);
    CHECK(std::abs(rhs - expect) <= 1e-12);
    CHECK(lhs > 0.0);  // strictly improving escape direction
    ++built;
  }
  CHECK(built == 10);
}

TEST_CASE("neighborhood falsifier rejects non-maximal vertices") {
  std::mt19937_64 rng(153);
  auto pool = dksel_test::random_pool(rng, 10, 4, 3);
  const auto q = dksel_test::random_unit_query(rng, 4);
  const auto c = relevance_from_query(pool, q);
  const auto p = params_with(3, 0.5);
  const auto result = oracle::brute_force_ccbqp(pool, c, p);
  // the worst vertex is certainly not a local max on a generic instance
  std::vector<Index> worst;
  double worst_value = std::numeric_limits<double>::infinity();
  oracle::BruteForceOptions opts;
  opts.keep_value_table = true;
  for (const auto& [subset, value] :
       oracle::brute_force_ccbqp(pool, c, p, opts).value_table) {
    if (value < worst_value) {
      worst_value = value;
      worst = subset;
    }
  }
  CHECK(oracle::neighborhood_local_max(pool, c, result.best_set, p));
  CHECK_FALSE(oracle::neighborhood_local_max(pool, c, worst, p));
}
