// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dksel/baselines.hpp"
#include "dksel/fw_solver.hpp"
#include "support/instances.hpp"

using namespace dksel;

namespace {

SelectParams params_with(std::size_t k, double theta) {
  SelectParams p;
  p.k = k;
  p.theta = theta;
  return p;
}

// Greedy MMR that recomputes the max-similarity from scratch at every step.
std::vector<Index> mmr_naive(const EmbeddingMatrix& pool,
                             std::span<const float> c, std::size_t k,
                             double theta) {
  std::vector<Index> selected;
  std::vector<char> picked(pool.n, 0);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = pool.n;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.n; ++i) {
      if (picked[i]) continue;
      double score;
      if (step == 0) {
        score = static_cast<double>(c[i]);
      } else {
        double max_sim = -std::numeric_limits<double>::infinity();
        for (Index j : selected)
          max_sim = std::max(max_sim,
                             dksel_test::naive_dot(pool.row(i), pool.row(j)));
        score = theta * static_cast<double>(c[i]) - (1.0 - theta) * max_sim;
      }
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    picked[best] = 1;
    selected.push_back(static_cast<Index>(best));
  }
  return selected;
}

// Dense DPP kernel L = Diag(r) W Diag(r) with r_i = exp(beta c_i).
std::vector<double> dense_kernel(const EmbeddingMatrix& pool,
                                 std::span<const float> c, double theta) {
  const double beta = theta / (1.0 - theta);
  const std::size_t n = pool.n;
  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      kernel[i * n + j] = std::exp(beta * double(c[i])) *
                          std::exp(beta * double(c[j])) *
                          dksel_test::naive_dot(pool.row(i), pool.row(j));
  return kernel;
}

// log det of the kernel restricted to a subset, via Gaussian elimination.
double logdet_subset(const std::vector<double>& kernel, std::size_t n,
                     std::span<const Index> subset) {
  const std::size_t m = subset.size();
  std::vector<double> a(m * m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t s = 0; s < m; ++s)
      a[r * m + s] = kernel[subset[r] * n + subset[s]];
  double logdet = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    if (a[p * m + p] <= 0.0) return -std::numeric_limits<double>::infinity();
    logdet += std::log(a[p * m + p]);
    for (std::size_t r = p + 1; r < m; ++r) {
      const double factor = a[r * m + p] / a[p * m + p];
      for (std::size_t s = p; s < m; ++s) a[r * m + s] -= factor * a[p * m + s];
    }
  }
  return logdet;
}

}  // namespace

TEST_CASE("select_topk basics and tie-break") {
  std::mt19937_64 rng(103);
  auto pool = dksel_test::random_pool(rng, 3, 4);
  const std::vector<float> c{0.9f, 0.1f, 0.5f};
  const auto report = select_topk(pool, c, params_with(2, 0.5));
  CHECK(report.selected == std::vector<Index>{0, 2});
  CHECK(report.integral);

  auto pool5 = dksel_test::random_pool(rng, 5, 4);
  const std::vector<float> ties{0.3f, 0.3f, 0.3f, 0.3f, 0.3f};
  CHECK(select_topk(pool5, ties, params_with(3, 0.5)).selected ==
        std::vector<Index>{0, 1, 2});
}

TEST_CASE("top_k_indices matches a full-sort oracle at scale") {
  std::mt19937_64 rng(105);
  const std::size_t n = 5000, k = 100;
  std::vector<float> c(n);
  std::uniform_int_distribution<int> coarse(0, 999);  // force ties
  for (auto& v : c) v = static_cast<float>(coarse(rng)) / 1000.f;

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (c[a] != c[b]) return c[a] > c[b];
    return a < b;
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  CHECK(top_k_indices<float>(c, k) == order);
}

TEST_CASE("select_mmr equals select_topk at theta=1") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    auto pool = dksel_test::random_pool(rng, 20, 5);
    const auto q = dksel_test::random_unit_query(rng, 5);
    const auto c = relevance_from_query(pool, q);
    const auto p = params_with(4, 1.0);
    CHECK(select_mmr(pool, c, p).first.selected ==
          select_topk(pool, c, p).selected);
  }
}

TEST_CASE("select_mmr with k=1 picks the most relevant item") {
  std::mt19937_64 rng(109);
  auto pool = dksel_test::random_pool(rng, 12, 5);
  const auto c = dksel_test::random_relevance(rng, 12);
  for (double theta : {0.0, 0.3, 0.8}) {
    const auto rep = select_mmr(pool, c, params_with(1, theta)).first;
    CHECK(rep.selected == top_k_indices<float>(c, 1));
  }
}

TEST_CASE("select_mmr matches the naive recomputation oracle exactly") {
  std::mt19937_64 rng(111);
  for (int trial = 0; trial < 20; ++trial) {
    auto pool = dksel_test::random_pool(rng, 10, 4, 3);
    const auto q = dksel_test::random_unit_query(rng, 4);
    const auto c = relevance_from_query(pool, q);
    const auto [report, trace] = select_mmr(pool, c, params_with(3, 0.5));
    auto expect = mmr_naive(pool, c, 3, 0.5);
    CHECK(trace.order == expect);
    std::sort(expect.begin(), expect.end());
    CHECK(report.selected == expect);
  }
}

TEST_CASE("select_dpp_greedy with k=1 picks the largest kernel diagonal") {
  std::mt19937_64 rng(113);
  auto pool = dksel_test::random_pool(rng, 10, 5);
  const auto q = dksel_test::random_unit_query(rng, 5);
  const auto c = relevance_from_query(pool, q);
  const auto rep = select_dpp_greedy(pool, c, params_with(1, 0.5)).first;
  CHECK(rep.selected == top_k_indices<float>(c, 1));
}

TEST_CASE("select_dpp_greedy never keeps an exact duplicate") {
  std::mt19937_64 rng(115);
  auto pool = dksel_test::random_pool(rng, 5, 4);
  // rows 0 and 1 bit-identical, both maximally relevant
  for (std::size_t j = 0; j < pool.d; ++j)
    pool.data[1 * pool.d + j] = pool.data[0 * pool.d + j];
  std::vector<float> c{0.9f, 0.9f, 0.4f, 0.3f, 0.2f};
  const auto rep = select_dpp_greedy(pool, c, params_with(2, 0.5)).first;
  const bool both = std::find(rep.selected.begin(), rep.selected.end(), 0) !=
                        rep.selected.end() &&
                    std::find(rep.selected.begin(), rep.selected.end(), 1) !=
                        rep.selected.end();
  CHECK_FALSE(both);
}

TEST_CASE("dpp greedy marginal gains equal determinant ratios") {
  std::mt19937_64 rng(117);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 8, k = 3;
    auto pool = dksel_test::random_pool(rng, n, 4, 3);
    const auto q = dksel_test::random_unit_query(rng, 4);
    const auto c = relevance_from_query(pool, q);
    const double theta = 0.5;
    const auto [report, trace] =
        select_dpp_greedy(pool, c, params_with(k, theta));
    const auto kernel = dense_kernel(pool, c, theta);

    std::vector<Index> prefix;
    double prev_logdet = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      prefix.push_back(trace.order[t]);
      const double logdet = logdet_subset(kernel, n, prefix);
      CHECK(trace.marginal_scores[t] ==
            doctest::Approx(logdet - prev_logdet).epsilon(1e-8));
      prev_logdet = logdet;
    }
  }
}

TEST_CASE("dpp greedy recovers the exhaustive MAP on most small instances") {
  std::mt19937_64 rng(119);
  int matches = 0, trials = 0;
  for (; trials < 20; ++trials) {
    const std::size_t n = 8, k = 3;
    auto pool = dksel_test::random_pool(rng, n, 4, 3);
    const auto q = dksel_test::random_unit_query(rng, 4);
    const auto c = relevance_from_query(pool, q);
    const double theta = 0.5;
    const auto report = select_dpp_greedy(pool, c, params_with(k, theta)).first;
    const auto kernel = dense_kernel(pool, c, theta);

    double best = -std::numeric_limits<double>::infinity();
    std::vector<Index> best_set;
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b)
        for (Index e = b + 1; e < n; ++e) {
          const std::vector<Index> subset{a, b, e};
          const double v = logdet_subset(kernel, n, subset);
          if (v > best) {
            best = v;
            best_set = subset;
          }
        }
    if (report.selected == best_set) ++matches;
  }
  // greedy MAP is a heuristic; on these instances it nearly always lands on
  // the exhaustive argmax
  CHECK(matches >= 17);
}

TEST_CASE("dpp falls back to top-k as theta approaches one") {
  std::mt19937_64 rng(121);
  auto pool = dksel_test::random_pool(rng, 15, 5);
  const auto q = dksel_test::random_unit_query(rng, 5);
  const auto c = relevance_from_query(pool, q);
  const auto p = params_with(4, 1.0);
  CHECK(select_dpp_greedy(pool, c, p).first.selected ==
        select_topk(pool, c, p).selected);
}

TEST_CASE("all selectors return k distinct indices and integral reports") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    auto pool = dksel_test::random_pool(rng, 18, 5, 4);
    const auto q = dksel_test::random_unit_query(rng, 5);
    const auto c = relevance_from_query(pool, q);
    const auto p = params_with(5, 0.4);
    for (const SolveReport& rep :
         {select_topk(pool, c, p), select_mmr(pool, c, p).first,
          select_dpp_greedy(pool, c, p).first, solve_fw(pool, c, p)}) {
      CHECK(rep.selected.size() == 5);
      CHECK(rep.integral);
      std::set<Index> unique(rep.selected.begin(), rep.selected.end());
      CHECK(unique.size() == 5);
      CHECK(std::is_sorted(rep.selected.begin(), rep.selected.end()));
    }
  }
}

TEST_CASE("fw, mmr and topk agree at theta=1 under the shared tie rule") {
  std::mt19937_64 rng(125);
  for (int trial = 0; trial < 10; ++trial) {
    auto pool = dksel_test::random_pool(rng, 25, 6);
    const auto q = dksel_test::random_unit_query(rng, 6);
    const auto c = relevance_from_query(pool, q);
    const auto p = params_with(6, 1.0);
    const auto topk = select_topk(pool, c, p).selected;
    CHECK(select_mmr(pool, c, p).first.selected == topk);
    CHECK(solve_fw(pool, c, p).selected == topk);
  }
}

TEST_CASE("k equal to n short-circuits every selector") {
  std::mt19937_64 rng(129);
  auto pool = dksel_test::random_pool(rng, 6, 4);
  const auto c = dksel_test::random_relevance(rng, 6);
  const auto p = params_with(6, 0.5);
  const std::vector<Index> all{0, 1, 2, 3, 4, 5};
  CHECK(select_topk(pool, c, p).selected == all);
  CHECK(select_mmr(pool, c, p).first.selected == all);
  CHECK(select_dpp_greedy(pool, c, p).first.selected == all);
}

TEST_CASE("greedy traces carry one finite score per pick") {
  std::mt19937_64 rng(127);
  auto pool = dksel_test::random_pool(rng, 12, 4);
  const auto q = dksel_test::random_unit_query(rng, 4);
  const auto c = relevance_from_query(pool, q);
  const auto p = params_with(4, 0.6);
  for (const GreedyTrace& trace :
       {select_mmr(pool, c, p).second, select_dpp_greedy(pool, c, p).second}) {
    CHECK(trace.order.size() == 4);
    CHECK(trace.marginal_scores.size() == 4);
    for (double s : trace.marginal_scores) CHECK(std::isfinite(s));
    std::set<Index> unique(trace.order.begin(), trace.order.end());
    CHECK(unique.size() == 4);
  }
}
