// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dksel/core.hpp"
#include "dksel/methods.hpp"

namespace dksel {

// Latency harness and the synthetic clustered corpus generator that stands in
// for a real passage pool. Benchmarks respect whatever DKSEL_THREADS says;
// leave it unset for single-threaded numbers that reflect algorithmic cost.

/// Aggregated latencies for one (method, k, theta) cell.
struct BenchResult {
  std::string method;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  double theta = 0.0;
  std::size_t runs = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double iters_mean = 0.0;  // meaningful for fw only
  bool has_iters = false;
};

namespace detail {

inline double nearest_rank(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
  if (rank == 0) rank = 1;
  return sorted[std::min(m - 1, rank - 1)];
}

}  // namespace detail

/// Times every (method, k, theta) cell over `runs` measured solves after
/// `warmup` discarded ones, cycling through the provided queries. Latency is
/// each report's own wall time (the selection call, nothing else).
inline std::vector<BenchResult> scaling_suite(
    const EmbeddingMatrix& pool, std::span<const QueryContext> queries,
    std::span<const Method> methods, std::span<const std::size_t> k_values,
    std::span<const double> thetas, std::size_t runs = 5,
    std::size_t warmup = 2, const SelectParams& base = {}) {
  if (queries.empty()) raise(Errc::BadParams, "bench needs at least one query");
  if (runs < 5) raise(Errc::BadParams, "bench needs runs >= 5");
  if (warmup < 2) raise(Errc::BadParams, "bench needs warmup >= 2");

  std::vector<BenchResult> results;
  for (Method m : methods) {
    for (std::size_t k : k_values) {
      for (double theta : thetas) {
        SelectParams params = base;
        params.k = k;
        params.theta = theta;
        std::vector<double> lat_ms;
        lat_ms.reserve(runs);
        double iters_total = 0.0;
        for (std::size_t r = 0; r < warmup + runs; ++r) {
          const QueryContext& query = queries[r % queries.size()];
          const SolveReport report =
              run_method(m, pool, query.relevance, params);
          if (r < warmup) continue;
          lat_ms.push_back(report.wall_time_s * 1e3);
          iters_total += static_cast<double>(report.iterations);
        }
        BenchResult res;
        res.method = method_name(m);
        res.n = pool.n;
        res.d = pool.d;
        res.k = k;
        res.theta = theta;
        res.runs = runs;
        double sum = 0.0;
        for (double v : lat_ms) sum += v;
        res.mean_ms = sum / static_cast<double>(runs);
        res.p50_ms = detail::nearest_rank(lat_ms, 0.50);
        res.p95_ms = detail::nearest_rank(lat_ms, 0.95);
        res.has_iters = m == Method::Fw;
        res.iters_mean =
            res.has_iters ? iters_total / static_cast<double>(runs) : 0.0;
        results.push_back(std::move(res));
      }
    }
  }
  return results;
}

/// CSV schema: method,n,d,k,theta,runs,mean_ms,p50_ms,p95_ms,iters_mean.
/// iters_mean is left empty for methods without an iteration count.
inline void write_bench_csv(std::ostream& os,
                            std::span<const BenchResult> results) {
  os << "method,n,d,k,theta,runs,mean_ms,p50_ms,p95_ms,iters_mean\n";
  char line[256];
  for (const BenchResult& r : results) {
    if (r.has_iters) {
      std::snprintf(line, sizeof(line),
                    "%s,%zu,%zu,%zu,%.10g,%zu,%.10g,%.10g,%.10g,%.10g\n",
                    r.method.c_str(), r.n, r.d, r.k, r.theta, r.runs,
                    r.mean_ms, r.p50_ms, r.p95_ms, r.iters_mean);
    } else {
      std::snprintf(line, sizeof(line),
                    "%s,%zu,%zu,%zu,%.10g,%zu,%.10g,%.10g,%.10g,\n",
                    r.method.c_str(), r.n, r.d, r.k, r.theta, r.runs,
                    r.mean_ms, r.p50_ms, r.p95_ms);
    }
    os << line;
  }
}

/// Knobs for the synthetic clustered corpus. `redundancy` is the number of
/// near-duplicate copies minted per base item; clusters == n with
/// redundancy == 1 degenerates to an approximately uniform pool.
struct SynthParams {
  std::size_t n = 10000;
  std::size_t d = 64;
  std::size_t clusters = 32;
  std::size_t redundancy = 1;
  std::size_t n_queries = 16;
  std::size_t clusters_per_query = 4;
  double cluster_spread = 0.25;    // base-item dispersion around its centroid
  double duplicate_jitter = 0.01;  // dispersion of copies around their base
  double query_noise = 0.05;
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  EmbeddingMatrix pool;
  std::vector<Index> cluster_of;      // per pool item
  std::vector<QueryContext> queries;  // gold = best item of each hit cluster
};

/// Deterministic generator: unit-norm items drawn as cluster centroids plus
/// noise, duplicated `redundancy` times with small jitter. Each query sits
/// near the midpoint of several cluster centroids and its gold set holds the
/// most relevant item of each of those clusters, so covering the gold set
/// requires spreading picks across clusters.
inline SynthCorpus synth_corpus(const SynthParams& sp) {
  if (sp.n < 1 || sp.d < 2 || sp.clusters < 1 || sp.redundancy < 1)
    raise(Errc::BadParams, "synth_corpus: n, d, clusters, redundancy must be positive (d >= 2)");
  if (sp.clusters_per_query < 1 || sp.clusters_per_query > sp.clusters)
    raise(Errc::BadParams, "synth_corpus: clusters_per_query out of range");

  std::mt19937_64 rng(sp.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = sp.d;

  auto draw_unit = [&](std::vector<double>& out) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = gauss(rng);
        norm2 += out[j] * out[j];
      }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
  };

  std::vector<std::vector<double>> centroids(sp.clusters,
                                             std::vector<double>(d));
  for (auto& c : centroids) draw_unit(c);

  SynthCorpus corpus;
  corpus.pool.n = sp.n;
  corpus.pool.d = d;
  corpus.pool.data.resize(sp.n * d);
  corpus.cluster_of.resize(sp.n);

  const std::size_t n_base = (sp.n + sp.redundancy - 1) / sp.redundancy;
  std::vector<double> base_vec(d), item(d);
  std::size_t written = 0;
  for (std::size_t b = 0; b < n_base && written < sp.n; ++b) {
    const Index cluster = static_cast<Index>(b % sp.clusters);
    for (std::size_t j = 0; j < d; ++j)
      base_vec[j] = centroids[cluster][j] + sp.cluster_spread * gauss(rng);
    double norm2 = 0.0;
    for (double v : base_vec) norm2 += v * v;
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
    for (double& v : base_vec) v *= inv;

    for (std::size_t copy = 0; copy < sp.redundancy && written < sp.n;
         ++copy, ++written) {
      double inorm2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        item[j] = base_vec[j] + sp.duplicate_jitter * gauss(rng);
        inorm2 += item[j] * item[j];
      }
      const double iinv = 1.0 / std::sqrt(std::max(inorm2, 1e-12));
      float* row = corpus.pool.row_mut(written);
      for (std::size_t j = 0; j < d; ++j)
        row[j] = static_cast<float>(item[j] * iinv);
      corpus.cluster_of[written] = cluster;
    }
  }
  corpus.pool = validate_pool(std::move(corpus.pool));

  std::vector<Index> cluster_ids(sp.clusters);
  std::iota(cluster_ids.begin(), cluster_ids.end(), Index{0});
  std::vector<double> qvec(d);
  for (std::size_t qi = 0; qi < sp.n_queries; ++qi) {
    // partial Fisher-Yates picks clusters_per_query distinct clusters
    for (std::size_t j = 0; j < sp.clusters_per_query; ++j) {
      const std::size_t pick =
          j + static_cast<std::size_t>(rng() % (sp.clusters - j));
      std::swap(cluster_ids[j], cluster_ids[pick]);
    }
    std::fill(qvec.begin(), qvec.end(), 0.0);
    for (std::size_t j = 0; j < sp.clusters_per_query; ++j)
      for (std::size_t t = 0; t < d; ++t)
        qvec[t] += centroids[cluster_ids[j]][t];
    for (std::size_t t = 0; t < d; ++t) {
      qvec[t] = qvec[t] / static_cast<double>(sp.clusters_per_query) +
                sp.query_noise * gauss(rng);
    }
    double norm2 = 0.0;
    for (double v : qvec) norm2 += v * v;
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
    std::vector<float> qf(d);
    for (std::size_t t = 0; t < d; ++t)
      qf[t] = static_cast<float>(qvec[t] * inv);

    QueryContext ctx = make_query_context(corpus.pool, qf,
                                          "q" + std::to_string(qi));
    std::vector<Index> gold;
    for (std::size_t j = 0; j < sp.clusters_per_query; ++j) {
      const Index cluster = cluster_ids[j];
      Index best = 0;
      float best_rel = -2.0f;
      for (std::size_t i = 0; i < sp.n; ++i) {
        if (corpus.cluster_of[i] != cluster) continue;
        if (ctx.relevance[i] > best_rel) {
          best_rel = ctx.relevance[i];
          best = static_cast<Index>(i);
        }
      }
      if (best_rel > -2.0f) gold.push_back(best);
    }
    std::sort(gold.begin(), gold.end());
    ctx.gold = std::move(gold);
    corpus.queries.push_back(std::move(ctx));
  }
  return corpus;
}

}  // namespace dksel
