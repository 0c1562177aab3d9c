// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed binary: exit codes, JSON report shape,
// CSV schemas, and reproducibility of the synth subcommand.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dksel/io.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dksel_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(DKSEL_BIN) + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("cli end to end") {
  TempDir tmp;
  const auto pool = tmp.path / "pool.dksel";
  const auto gold = tmp.path / "gold.jsonl";
  const auto qfile = tmp.path / "queries.dksel";

  SUBCASE("synth is reproducible byte for byte") {
    const std::string args =
        "synth --n 300 --d 16 --clusters 8 --redundancy 4 --queries 5 "
        "--seed 42 --out-pool " + pool.string() + " --out-gold " +
        gold.string();
    REQUIRE(run(args) == 0);
    const auto pool_bytes = slurp(pool);
    const auto gold_bytes = slurp(gold);
    REQUIRE(run(args) == 0);
    CHECK(slurp(pool) == pool_bytes);
    CHECK(slurp(gold) == gold_bytes);
  }

  // shared fixture for the remaining subcases
  REQUIRE(run("synth --n 300 --d 16 --clusters 8 --redundancy 4 --queries 5 "
              "--seed 42 --out-pool " + pool.string() + " --out-gold " +
              gold.string()) == 0);

  // build a three-item pool with a known relevance ordering and a matching
  // query file: relevance to (1,0,...) is the first coordinate
  {
    dksel::EmbeddingMatrix tiny;
    tiny.n = 3;
    tiny.d = 16;
    tiny.data.assign(3 * 16, 0.f);
    auto set_row = [&](std::size_t i, float first) {
      tiny.data[i * 16 + 0] = first;
      tiny.data[i * 16 + 1] =
          std::sqrt(std::max(0.f, 1.f - first * first));
    };
    set_row(0, 0.9f);
    set_row(1, 0.1f);
    set_row(2, 0.5f);
    dksel::save_embeddings(tmp.path / "tiny.dksel",
                           dksel::validate_pool(std::move(tiny)));

    dksel::EmbeddingMatrix qm;
    qm.n = 1;
    qm.d = 16;
    qm.data.assign(16, 0.f);
    qm.data[0] = 1.f;
    dksel::save_embeddings(qfile, dksel::validate_pool(std::move(qm)));
  }

  SUBCASE("select topk returns the expected set and config echo") {
    const auto out = tmp.path / "report.json";
    REQUIRE(run("select --pool " + (tmp.path / "tiny.dksel").string() +
                " --query " + qfile.string() +
                " --method topk --k 2 --out " + out.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["report"]["selected"] == nlohmann::json({0, 2}));
    CHECK(j["report"]["integral"] == true);
    CHECK(j["config"]["method"] == "topk");
    CHECK(j["config"]["k"] == 2);
    CHECK(j["config"]["lambda"] == 2.0);
    CHECK(j["config"]["n"] == 3);
  }

  SUBCASE("fw at theta=1 matches topk") {
    const auto a = tmp.path / "a.json";
    const auto b = tmp.path / "b.json";
    REQUIRE(run("select --pool " + pool.string() + " --query " +
                qfile.string() + " --method fw --theta 1.0 --k 5 --out " +
                a.string()) == 0);
    REQUIRE(run("select --pool " + pool.string() + " --query " +
                qfile.string() + " --method topk --theta 1.0 --k 5 --out " +
                b.string()) == 0);
    const auto ja = nlohmann::json::parse(slurp(a));
    const auto jb = nlohmann::json::parse(slurp(b));
    CHECK(ja["report"]["selected"] == jb["report"]["selected"]);
    CHECK(ja["report"]["iterations"].get<int>() <= 1);
  }

  SUBCASE("exact method over the guard exits with code 2") {
    CHECK(run("select --pool " + pool.string() + " --query " +
              qfile.string() + " --method exact --k 20 2> " +
              (tmp.path / "err.txt").string()) == 2);
    CHECK(slurp(tmp.path / "err.txt").find("brute-force guard") !=
          std::string::npos);
  }

  SUBCASE("validation failures exit with code 2") {
    CHECK(run("select --pool " + pool.string() + " --query " +
              qfile.string() + " --method fw --k 9999 2> /dev/null") == 2);
    CHECK(run("select --pool " + (tmp.path / "missing.dksel").string() +
              " --query " + qfile.string() +
              " --method fw --k 2 2> /dev/null") == 2);
    CHECK(run("select --pool " + pool.string() + " --query " +
              qfile.string() +
              " --method fw --k 5 --lambda 1.0 2> /dev/null") == 2);
  }

  SUBCASE("sweep emits the expected row count and schema") {
    const auto csv = tmp.path / "sweep.csv";
    REQUIRE(run("sweep --pool " + pool.string() + " --gold " + gold.string() +
                " --methods topk --k 4 --out " + csv.string(),
                tmp.path / "sweep_stdout.txt") == 0);
    const auto text = slurp(csv);
    CHECK(text.rfind("method,theta,k,query_id,recall,ilad,latency_ms\n", 0) ==
          0);
    std::size_t rows = 0;
    for (char ch : text)
      if (ch == '\n') ++rows;
    CHECK(rows == 1 + 9 * 5);  // header + 9 thetas x 5 queries
  }

  SUBCASE("bench writes CSV plus config sidecar") {
    const auto csv = tmp.path / "bench.csv";
    const auto cfg = tmp.path / "bench_config.json";
    REQUIRE(run("bench --pool " + pool.string() + " --gold " + gold.string() +
                " --methods fw,mmr --k-values 4 --thetas 0.7 --runs 5 "
                "--warmup 2 --out " + csv.string() + " --config-out " +
                cfg.string(),
                tmp.path / "bench_stdout.txt") == 0);
    const auto text = slurp(csv);
    CHECK(text.rfind(
              "method,n,d,k,theta,runs,mean_ms,p50_ms,p95_ms,iters_mean\n",
              0) == 0);
    const auto j = nlohmann::json::parse(slurp(cfg));
    CHECK(j["runs"] == 5);
    CHECK(j["n"] == 300);
  }

  SUBCASE("DKSEL_THREADS and --threads do not change the selection") {
    const auto base = tmp.path / "t1.json";
    const auto env2 = tmp.path / "t2.json";
    const auto flag2 = tmp.path / "t3.json";
    const std::string select = "select --pool " + pool.string() + " --query " +
                               qfile.string() +
                               " --method fw --theta 0.4 --k 8 --out ";
    REQUIRE(run(select + base.string()) == 0);
    REQUIRE(std::system(("DKSEL_THREADS=2 " + std::string(DKSEL_BIN) + " " +
                         select + env2.string())
                            .c_str()) == 0);
    REQUIRE(run(select + flag2.string() + " --threads 2") == 0);
    const auto jb = nlohmann::json::parse(slurp(base));
    const auto je = nlohmann::json::parse(slurp(env2));
    const auto jf = nlohmann::json::parse(slurp(flag2));
    CHECK(je["report"]["selected"] == jb["report"]["selected"]);
    CHECK(je["report"]["objective"] == jb["report"]["objective"]);
    CHECK(je["config"]["threads"] == 2);
    CHECK(jf["report"]["selected"] == jb["report"]["selected"]);
    CHECK(jf["config"]["threads"] == 2);
  }

  SUBCASE("bad subcommand exits with code 2") {
    CHECK(run("frobnicate 2> /dev/null") == 2);
  }
}
