// Copyright 2026 The lrd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "lrd/ranker.hpp"
#include "lrd/store.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result lrd_run(std::vector<std::string> args) {
  args.insert(args.begin(), "lrd");
  std::ostringstream out, err;
  const int code = lrd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One scratch directory with a corpus and a tiny pretrained teacher.
struct Workspace {
  fs::path dir;
  std::string corpus;
  Workspace() {
    dir = fs::temp_directory_path() / "lrd_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    corpus = (dir / "corpus.txt").string();
    std::ofstream f(corpus);
    for (int i = 0; i < 300; ++i) {
      f << "call me ishmael. some years ago, never mind how long precisely, line " << i << ".\n";
    }
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::vector<std::string> pretrain_args(const std::string& out) const {
    return {"pretrain", "--corpus",  corpus, "--out",     path(out), "--d-model", "32",
            "--layers", "2",        "--heads", "2",      "--d-ff",  "64",      "--max-seq",
            "32",       "--tokens", "4096",    "--batch-size", "4", "--seq-len", "32",
            "--warmup", "4",        "--eval-interval", "2048"};
  }
};

Workspace& ws() {
  static Workspace w;
  static bool ready = false;
  if (!ready) {
    const auto r = lrd_run(w.pretrain_args("teacher"));
    REQUIRE(r.code == 0);
    ready = true;
  }
  return w;
}

}  // namespace

TEST_CASE("pretrain writes a checkpoint, a curve and a reproducibility header") {
  auto& w = ws();
  CHECK(fs::exists(w.path("teacher/model.manifest")));
  CHECK(slurp(w.path("teacher/pretrain.csv")).rfind("tokens_seen,step,lr,train_loss", 0) == 0);
  const std::string header = slurp(w.path("teacher/run.txt"));
  CHECK(header.find("command\tlrd pretrain") == 0);
  CHECK(header.find("\nseed\t0\n") != std::string::npos);
  CHECK(header.find("\nconfig_hash\t") != std::string::npos);
  // Same seed, same bytes.
  REQUIRE(lrd_run(w.pretrain_args("teacher2")).code == 0);
  CHECK(slurp(w.path("teacher/model.bin")) == slurp(w.path("teacher2/model.bin")));
}

TEST_CASE("exit codes") {
  auto& w = ws();
  SUBCASE("missing corpus names the path") {
    const auto r = lrd_run({"pretrain", "--corpus", w.path("absent.txt"), "--out", w.path("x")});
    CHECK(r.code == 2);
    CHECK(r.err.find("absent.txt") != std::string::npos);
  }
  SUBCASE("usage errors") {
    CHECK(lrd_run({}).code == 2);
    CHECK(lrd_run({"pretrain", "--out", w.path("x")}).code == 2);
    CHECK(lrd_run({"plan", "--checkpoint", w.path("teacher"), "--out", w.path("p")}).code == 2);
    CHECK(lrd_run({"plan", "--checkpoint", w.path("teacher"), "--reduction", "0.2",
                   "--target-size", "10", "--out", w.path("p")})
              .code == 2);
    CHECK(lrd_run({"distill", "--teacher", w.path("teacher"), "--student", w.path("teacher"),
                   "--corpus", w.corpus, "--strategy", "both", "--out", w.path("d")})
              .code == 2);
  }
  SUBCASE("infeasible target reports the floor") {
    const auto r = lrd_run({"plan", "--checkpoint", w.path("teacher"), "--reduction", "0.9",
                            "--min-rank", "8", "--rank-step", "4", "--out", w.path("p")});
    CHECK(r.code == 3);
    CHECK(r.err.find("floor") != std::string::npos);
  }
  SUBCASE("corrupt checkpoint") {
    fs::create_directories(w.path("broken"));
    fs::copy_file(w.path("teacher/model.manifest"), w.path("broken/model.manifest"),
                  fs::copy_options::overwrite_existing);
    std::ofstream(w.path("broken/model.bin")) << "short";
    CHECK(lrd_run({"analyze", "--checkpoint", w.path("broken"), "--corpus", w.corpus, "--out",
                   w.path("a")})
              .code == 2);
  }
}

TEST_CASE("config files apply and flags win") {
  auto& w = ws();
  std::ofstream(w.path("plan.cfg")) << "# planner settings\nreduction=0.3\nmin-rank=8\nrank-step=4\n";
  auto r = lrd_run({"plan", "--config", w.path("plan.cfg"), "--checkpoint", w.path("teacher"),
                    "--out", w.path("cfgplan")});
  REQUIRE(r.code == 0);
  const auto from_file = lrd::read_plan(w.path("cfgplan/plan.txt"));
  CHECK(from_file.min_rank == 8);
  r = lrd_run({"plan", "--config", w.path("plan.cfg"), "--checkpoint", w.path("teacher"),
               "--min-rank", "4", "--out", w.path("cfgplan2")});
  REQUIRE(r.code == 0);
  CHECK(lrd::read_plan(w.path("cfgplan2/plan.txt")).min_rank == 4);
  CHECK(slurp(w.path("cfgplan/run.txt")).find("reduction=0.3") != std::string::npos);

  std::ofstream(w.path("bad.cfg")) << "no-such-key=1\n";
  CHECK(lrd_run({"plan", "--config", w.path("bad.cfg"), "--checkpoint", w.path("teacher"),
                 "--reduction", "0.2", "--out", w.path("cfgbad")})
            .code == 2);
}

TEST_CASE("plan, compress, distill, eval, analyze, bench") {
  auto& w = ws();
  const auto dense = lrd::load_model(w.path("teacher/model"));
  const std::size_t dense_params = lrd::count_params(dense);

  SUBCASE("zero reduction is an empty plan") {
    REQUIRE(lrd_run({"plan", "--checkpoint", w.path("teacher"), "--reduction", "0", "--out",
                     w.path("p0")})
                .code == 0);
    CHECK(lrd::read_plan(w.path("p0/plan.txt")).entries.empty());
  }
  SUBCASE("the three strategies give three different plans") {
    std::vector<std::string> texts;
    for (std::string s : {"bottom", "top", "uniform"}) {
      REQUIRE(lrd_run({"plan", "--checkpoint", w.path("teacher"), "--strategy", s,
                       "--reduction", "0.2", "--min-rank", "8", "--rank-step", "4", "--out",
                       w.path("p-" + s)})
                  .code == 0);
      texts.push_back(slurp(w.path("p-" + s + "/plan.txt")));
    }
    CHECK(texts[0] != texts[1]);
    CHECK(texts[1] != texts[2]);
    CHECK(texts[0] != texts[2]);
  }
  SUBCASE("pipeline") {
    REQUIRE(lrd_run({"plan", "--checkpoint", w.path("teacher"), "--reduction", "0.2",
                     "--min-rank", "8", "--rank-step", "4", "--out", w.path("plan")})
                .code == 0);
    const auto plan = lrd::read_plan(w.path("plan/plan.txt"));
    REQUIRE(lrd_run({"compress", "--checkpoint", w.path("teacher"), "--plan", w.path("plan"),
                     "--out", w.path("comp")})
                .code == 0);
    const auto comp = lrd::load_model(w.path("comp/model"));
    CHECK(lrd::count_params(comp) == lrd::planned_size(plan, lrd::shape_of(dense)));
    CHECK(5 * lrd::count_params(comp) <= 4 * dense_params);
    // Already factored.
    CHECK(lrd_run({"compress", "--checkpoint", w.path("comp"), "--plan", w.path("plan"),
                   "--out", w.path("comp2")})
              .code == 3);

    const std::vector<std::string> distill = {
        "distill",      "--teacher", w.path("teacher"), "--student", w.path("comp"),
        "--corpus",     w.corpus,    "--batch-size",    "4",         "--seq-len",
        "32",           "--eval-interval", "1024"};
    auto args = distill;
    args.insert(args.end(), {"--tokens", "0", "--out", w.path("d0")});
    REQUIRE(lrd_run(args).code == 0);
    CHECK(slurp(w.path("d0/model.bin")) == slurp(w.path("comp/model.bin")));

    args = distill;
    args.insert(args.end(), {"--tokens", "2048", "--out", w.path("d1")});
    REQUIRE(lrd_run(args).code == 0);
    args = distill;
    args.insert(args.end(), {"--tokens", "2048", "--out", w.path("d2")});
    REQUIRE(lrd_run(args).code == 0);
    CHECK(slurp(w.path("d1/model.bin")) == slurp(w.path("d2/model.bin")));
    CHECK(slurp(w.path("d1/distill.csv")) == slurp(w.path("d2/distill.csv")));
    CHECK(slurp(w.path("d1/model.bin")) != slurp(w.path("comp/model.bin")));

    args = distill;
    args.insert(args.end(), {"--tokens", "1000000", "--order", "sequential", "--out",
                             w.path("d3")});
    const auto r = lrd_run(args);
    CHECK(r.code == 0);
    CHECK(r.err.find("warning: data ran out") != std::string::npos);

    const auto ev = lrd_run({"eval", "--checkpoint", w.path("teacher"), "--checkpoint",
                             w.path("d1"), "--label", "teacher", "--label", "student",
                             "--corpus", w.corpus, "--seq-len", "32", "--reps", "1", "--out",
                             w.path("ev")});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("teacher") != std::string::npos);
    CHECK(ev.out.find("student") != std::string::npos);
    CHECK(slurp(w.path("ev/eval.csv")).rfind("model,perplexity,params", 0) == 0);

    const auto an = lrd_run({"analyze", "--checkpoint", w.path("teacher"), "--corpus", w.corpus,
                             "--seq-len", "32", "--out", w.path("an")});
    REQUIRE(an.code == 0);
    CHECK(std::count(an.out.begin(), an.out.end(), '\n') == 1 + 7 * 2 + 2);

    const auto b = lrd_run({"bench", "--dense", w.path("teacher"), "--compressed", w.path("d1"),
                            "--corpus", w.corpus, "--seq-len", "32", "--trials", "2", "--reps",
                            "1", "--out", w.path("bench")});
    REQUIRE(b.code == 0);
    CHECK(b.out.find("compressed faster in") != std::string::npos);
  }
}

TEST_CASE("exit code mapping") {
  using lrd::ErrorKind;
  CHECK(lrd::cli::exit_code(ErrorKind::kInput) == 2);
  CHECK(lrd::cli::exit_code(ErrorKind::kCorrupt) == 2);
  CHECK(lrd::cli::exit_code(ErrorKind::kShape) == 3);
  CHECK(lrd::cli::exit_code(ErrorKind::kInfeasible) == 3);
  CHECK(lrd::cli::exit_code(ErrorKind::kNumerical) == 4);
}
