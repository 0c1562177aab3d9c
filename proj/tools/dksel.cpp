// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: select / sweep / bench / synth.
// Exit codes: 0 success, 2 validation error, 3 solver error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dksel/dksel.hpp"

namespace {

using nlohmann::ordered_json;

struct SelectArgs {
  std::string pool_path;
  std::string query_path;
  std::size_t query_row = 0;
  std::string method = "fw";
  std::size_t k = 10;
  double theta = 0.5;
  double lambda = 2.0;
  std::size_t max_iters = 1000;
  double gap_tol = 1e-9;
  std::size_t recompute_period = 50;
  std::string init = "topk";
  bool allow_lambda_below_two = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_path;
};

struct SweepArgs {
  std::string pool_path;
  std::string gold_path;
  std::string query_pool_path;
  std::string methods = "fw,mmr,dpp,topk";
  std::vector<double> thetas;
  std::size_t k = 10;
  double lambda = 2.0;
  unsigned threads = 0;
  std::string out_path;
};

struct BenchArgs {
  std::string pool_path;
  std::string gold_path;
  std::string query_pool_path;
  std::string methods = "fw,mmr";
  std::vector<std::size_t> k_values;
  std::vector<double> thetas;
  std::size_t runs = 5;
  std::size_t warmup = 2;
  double lambda = 2.0;
  unsigned threads = 0;
  std::string out_path;
  std::string config_out;
};

struct SynthArgs {
  dksel::SynthParams params;
  std::string out_pool;
  std::string out_gold;
};

dksel::SelectParams to_params(const SelectArgs& a) {
  dksel::SelectParams p;
  p.k = a.k;
  p.theta = a.theta;
  p.lambda = a.lambda;
  p.max_iters = a.max_iters;
  p.gap_tol = a.gap_tol;
  p.recompute_period = a.recompute_period;
  p.allow_lambda_below_two = a.allow_lambda_below_two;
  if (a.init == "topk") {
    p.init = dksel::InitKind::TopKRelevance;
  } else if (a.init == "uniform") {
    p.init = dksel::InitKind::Uniform;
  } else {
    dksel::raise(dksel::Errc::BadParams,
                 "unknown init '" + a.init + "' (expected topk|uniform)");
  }
  return p;
}

ordered_json report_to_json(const dksel::SolveReport& report) {
  ordered_json j;
  j["selected"] = report.selected;
  j["objective"] = report.objective;
  j["iterations"] = report.iterations;
  j["final_gap"] = report.final_gap;
  j["integral"] = report.integral;
  j["local_max_certified"] = report.local_max_certified;
  j["grad_gap"] = report.grad_gap;
  j["hit_iteration_cap"] = report.hit_iteration_cap;
  j["wall_time_s"] = report.wall_time_s;
  return j;
}

int run_select(const SelectArgs& args) {
  if (args.threads > 0) dksel::detail::set_thread_cap(args.threads);
  const auto pool = dksel::load_embeddings(args.pool_path);
  const auto queries = dksel::load_embeddings(args.query_path);
  if (args.query_row >= queries.n)
    dksel::raise(dksel::Errc::BadParams, "--query-row out of range");
  const auto query = queries.row(args.query_row);
  const auto relevance = dksel::relevance_from_query(pool, query);

  const auto params = to_params(args);
  const auto method = dksel::parse_method(args.method);
  const auto report = dksel::run_method(method, pool, relevance, params);

  ordered_json j;
  j["config"] = {{"command", "select"},
                 {"pool", args.pool_path},
                 {"query", args.query_path},
                 {"query_row", args.query_row},
                 {"method", args.method},
                 {"k", args.k},
                 {"theta", args.theta},
                 {"lambda", args.lambda},
                 {"max_iters", args.max_iters},
                 {"gap_tol", args.gap_tol},
                 {"recompute_period", args.recompute_period},
                 {"init", args.init},
                 {"allow_lambda_below_two", args.allow_lambda_below_two},
                 {"seed", args.seed},
                 {"threads", dksel::detail::thread_cap()},
                 {"n", pool.n},
                 {"d", pool.d}};
  j["report"] = report_to_json(report);

  if (args.out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    dksel::write_json_file(args.out_path, j);
    std::printf("wrote %s\n", args.out_path.c_str());
  }
  return 0;
}

std::vector<double> default_thetas() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

int run_sweep(const SweepArgs& args) {
  if (args.threads > 0) dksel::detail::set_thread_cap(args.threads);
  const auto pool = dksel::load_embeddings(args.pool_path);
  std::optional<dksel::EmbeddingMatrix> query_pool;
  if (!args.query_pool_path.empty())
    query_pool = dksel::load_embeddings(args.query_pool_path);
  const auto queries = dksel::load_gold_file(
      args.gold_path, pool, query_pool ? &*query_pool : nullptr);
  const auto methods = dksel::parse_method_list(args.methods);
  const auto thetas = args.thetas.empty() ? default_thetas() : args.thetas;

  dksel::SelectParams base;
  base.lambda = args.lambda;
  const auto records =
      dksel::pareto_sweep(pool, queries, methods, thetas, args.k, base);

  std::ofstream os(args.out_path, std::ios::trunc);
  if (!os)
    dksel::raise(dksel::Errc::BadFile, "cannot open " + args.out_path);
  const std::size_t written = dksel::write_eval_csv(os, records);
  if (written == 0) {
    std::fprintf(stderr, "dksel: every sweep cell failed\n");
    return 3;
  }
  if (written < records.size())
    std::fprintf(stderr, "dksel: %zu of %zu sweep cells failed\n",
                 records.size() - written, records.size());
  std::printf("wrote %s (%zu rows)\n", args.out_path.c_str(), written);
  return 0;
}

int run_bench(const BenchArgs& args) {
  if (args.threads > 0) dksel::detail::set_thread_cap(args.threads);
  const auto pool = dksel::load_embeddings(args.pool_path);
  std::optional<dksel::EmbeddingMatrix> query_pool;
  if (!args.query_pool_path.empty())
    query_pool = dksel::load_embeddings(args.query_pool_path);
  const auto queries = dksel::load_gold_file(
      args.gold_path, pool, query_pool ? &*query_pool : nullptr);
  const auto methods = dksel::parse_method_list(args.methods);
  const auto k_values = args.k_values.empty()
                            ? std::vector<std::size_t>{25, 50, 100}
                            : args.k_values;
  const auto thetas =
      args.thetas.empty() ? std::vector<double>{0.5, 0.7, 0.9} : args.thetas;

  dksel::SelectParams base;
  base.lambda = args.lambda;
  const auto results = dksel::scaling_suite(pool, queries, methods, k_values,
                                            thetas, args.runs, args.warmup,
                                            base);

  std::ofstream os(args.out_path, std::ios::trunc);
  if (!os)
    dksel::raise(dksel::Errc::BadFile, "cannot open " + args.out_path);
  dksel::write_bench_csv(os, results);

  const std::string config_path =
      args.config_out.empty() ? args.out_path + ".config.json"
                              : args.config_out;
  ordered_json config = {{"command", "bench"},
                         {"pool", args.pool_path},
                         {"gold", args.gold_path},
                         {"methods", args.methods},
                         {"k_values", k_values},
                         {"thetas", thetas},
                         {"runs", args.runs},
                         {"warmup", args.warmup},
                         {"lambda", args.lambda},
                         {"threads", dksel::detail::thread_cap()},
                         {"n", pool.n},
                         {"d", pool.d}};
  dksel::write_json_file(config_path, config);
  std::printf("wrote %s and %s\n", args.out_path.c_str(), config_path.c_str());
  return 0;
}

int run_synth(const SynthArgs& args) {
  const auto corpus = dksel::synth_corpus(args.params);
  dksel::save_embeddings(args.out_pool, corpus.pool);
  dksel::save_gold_file(args.out_gold, corpus.queries);
  std::printf("wrote %s (%zu x %zu) and %s (%zu queries)\n",
              args.out_pool.c_str(), corpus.pool.n, corpus.pool.d,
              args.out_gold.c_str(), corpus.queries.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diversity-aware top-k selection over embedding pools"};
  app.require_subcommand(1);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "select k items for one query");
  select->add_option("--pool", sel.pool_path, "embedding pool file")->required();
  select->add_option("--query", sel.query_path, "query embedding file")->required();
  select->add_option("--query-row", sel.query_row, "row of the query file to use");
  select->add_option("--method", sel.method, "fw|mmr|dpp|topk|exact");
  select->add_option("--k", sel.k, "selection budget")->required();
  select->add_option("--theta", sel.theta, "relevance/diversity trade-off");
  select->add_option("--lambda", sel.lambda, "diagonal shift (>= 2)");
  select->add_option("--max-iters", sel.max_iters, "iteration cap");
  select->add_option("--gap-tol", sel.gap_tol, "relative gap tolerance");
  select->add_option("--recompute-period", sel.recompute_period,
                     "iterations between cache rebuilds");
  select->add_option("--init", sel.init, "fw start: topk|uniform");
  select->add_flag("--allow-lambda-below-2", sel.allow_lambda_below_two,
                   "permit lambda < 2 (experiments)");
  select->add_option("--seed", sel.seed, "echoed into the config");
  select->add_option("--threads", sel.threads, "worker cap (overrides DKSEL_THREADS)");
  select->add_option("--out", sel.out_path, "write the JSON report here");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "theta sweep producing recall/ILAD CSV");
  sweep->add_option("--pool", sw.pool_path)->required();
  sweep->add_option("--gold", sw.gold_path, "gold JSONL file")->required();
  sweep->add_option("--query-pool", sw.query_pool_path,
                    "embedding file backing embedding_ref records");
  sweep->add_option("--methods", sw.methods, "comma list of methods");
  sweep->add_option("--thetas", sw.thetas, "theta grid (default 0.1..0.9)");
  sweep->add_option("--k", sw.k)->required();
  sweep->add_option("--lambda", sw.lambda);
  sweep->add_option("--threads", sw.threads);
  sweep->add_option("--out", sw.out_path, "output CSV path")->required();

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "latency scaling suite");
  bench->add_option("--pool", be.pool_path)->required();
  bench->add_option("--gold", be.gold_path)->required();
  bench->add_option("--query-pool", be.query_pool_path);
  bench->add_option("--methods", be.methods);
  bench->add_option("--k-values", be.k_values, "k grid (default 25 50 100)");
  bench->add_option("--thetas", be.thetas, "theta grid (default 0.5 0.7 0.9)");
  bench->add_option("--runs", be.runs, "measured runs per cell (>= 5)");
  bench->add_option("--warmup", be.warmup, "discarded runs per cell (>= 2)");
  bench->add_option("--lambda", be.lambda);
  bench->add_option("--threads", be.threads);
  bench->add_option("--out", be.out_path, "output CSV path")->required();
  bench->add_option("--config-out", be.config_out, "JSON config sidecar path");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "generate a clustered synthetic corpus");
  synth->add_option("--n", sy.params.n, "pool size");
  synth->add_option("--d", sy.params.d, "embedding dimension");
  synth->add_option("--clusters", sy.params.clusters);
  synth->add_option("--redundancy", sy.params.redundancy,
                    "near-duplicate copies per base item");
  synth->add_option("--queries", sy.params.n_queries);
  synth->add_option("--clusters-per-query", sy.params.clusters_per_query);
  synth->add_option("--spread", sy.params.cluster_spread);
  synth->add_option("--jitter", sy.params.duplicate_jitter);
  synth->add_option("--query-noise", sy.params.query_noise);
  synth->add_option("--seed", sy.params.seed);
  synth->add_option("--out-pool", sy.out_pool)->required();
  synth->add_option("--out-gold", sy.out_gold)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (select->parsed()) return run_select(sel);
    if (sweep->parsed()) return run_sweep(sw);
    if (bench->parsed()) return run_bench(be);
    if (synth->parsed()) return run_synth(sy);
  } catch (const dksel::Error& e) {
    std::fprintf(stderr, "dksel: error: %s\n", e.what());
    return e.is_validation() ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dksel: internal error: %s\n", e.what());
    return 3;
  }
  return 2;
}
