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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lrd/distill.hpp"
#include "lrd/eval.hpp"
#include "lrd/pretrain.hpp"
#include "lrd/ranker.hpp"
#include "lrd/store.hpp"

namespace lrd::cli {
namespace {

namespace fs = std::filesystem;

// Flat key=value config files: keys without a section belong to whichever
// subcommand is running.
class FlatConfig : public CLI::ConfigBase {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  double holdout_frac = 0.02;
  std::string out_dir;
};

struct ShapeFlags {
  ModelConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--d-model", cfg.d_model, "model width")->capture_default_str();
    app->add_option("--layers", cfg.n_layers, "number of layers")->capture_default_str();
    app->add_option("--heads", cfg.n_heads, "attention heads")->capture_default_str();
    app->add_option("--d-ff", cfg.d_ff, "MLP hidden width")->capture_default_str();
    app->add_option("--max-seq", cfg.max_seq, "maximum sequence length")->capture_default_str();
  }
};

// A checkpoint argument may name a stem or a directory holding `model`.
std::string resolve_stem(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "model").string();
  return path;
}

std::string out_path(const Common& c, const std::string& file) {
  return (fs::path(c.out_dir) / file).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!(f << text)) throw InputError("cannot write " + path);
}

// The plan a compressed checkpoint encodes.
RankPlan plan_of(const Model& m) {
  RankPlan plan;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (MatrixName n : kMatrixNames) {
      const Weight& w = m.layers[l][n];
      if (is_factored(w)) {
        plan.entries.push_back({l, std::string(to_string(n)), std::get<LowRankFactor>(w).rank()});
      }
    }
  }
  return plan;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int main(const std::vector<std::string>& args) {
    CLI::App app{"Layer-wise low-rank compression and distillation for byte-level decoders",
                 "lrd"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    app.config_formatter(std::make_shared<FlatConfig>(&app));
    app.allow_config_extras(CLI::config_extras_mode::error);

    add_pretrain(app);
    add_plan(app);
    add_compress(app);
    add_distill(app);
    add_analyze(app);
    add_eval(app);
    add_bench(app);

    std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    command_line_.clear();
    for (const auto& a : args) command_line_ += (command_line_.empty() ? "" : " ") + a;
    try {
      app.parse(rest);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitInput;
    }
    for (CLI::App* sub : app.get_subcommands()) {
      active_ = sub;
      try {
        prepare();
        actions_.at(sub->get_name())();
      } catch (const InfeasibleTargetError& e) {
        err_ << "error: " << e.what() << "\n";
        return kExitShape;
      } catch (const Error& e) {
        err_ << "error: " << e.what() << "\n";
        return exit_code(e.kind());
      } catch (const std::exception& e) {
        err_ << "error: " << e.what() << "\n";
        return kExitInput;
      }
    }
    return kExitOk;
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::string command_line_;
  CLI::App* active_ = nullptr;
  std::map<std::string, std::function<void()>> actions_;
  Common common_;

  CLI::App* sub(CLI::App& app, const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--seed", common_.seed, "random seed")->capture_default_str();
    s->add_option("--threads", common_.threads, "worker threads; 1 is the deterministic mode")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s->add_option("--out", common_.out_dir, "output directory")->required();
    return s;
  }

  void add_holdout(CLI::App* s) {
    s->add_option("--holdout-frac", common_.holdout_frac, "tail fraction of the corpus held out")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.5));
  }

  void prepare() {
    fs::create_directories(common_.out_dir);
    const std::string effective = active_->config_to_str(true, false);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016zx", std::hash<std::string>{}(effective));
    std::ostringstream header;
    header << "command\t" << command_line_ << "\n"
           << "seed\t" << common_.seed << "\n"
           << "threads\t" << common_.threads << "\n"
           << "config_hash\t" << buf << "\n"
           << "# effective configuration\n"
           << effective;
    write_file(out_path(common_, "run.txt"), header.str());
    err_ << "lrd " << active_->get_name() << ": seed=" << common_.seed
         << " threads=" << common_.threads << " config_hash=" << buf << "\n";
    if (common_.threads > 1) {
      err_ << "note: kernels run single-threaded; --threads is recorded only\n";
    }
  }

  Corpus load_corpus(const std::string& path) const {
    if (!fs::exists(path)) throw InputError("corpus not found: " + path);
    return Corpus::from_file(path, common_.holdout_frac);
  }

  // ---------------------------------------------------------------- pretrain
  struct {
    std::string corpus;
    ShapeFlags shape;
    PretrainConfig cfg;
  } pre_;

  void add_pretrain(CLI::App& app) {
    auto* s = sub(app, "pretrain", "train a teacher from scratch on a byte corpus");
    add_holdout(s);
    s->add_option("--corpus", pre_.corpus, "training text")->required();
    pre_.shape.add(s);
    auto& c = pre_.cfg;
    s->add_option("--tokens", c.token_budget, "token budget")->capture_default_str();
    s->add_option("--batch-size", c.batch_size)->capture_default_str();
    s->add_option("--seq-len", c.seq_len)->capture_default_str();
    s->add_option("--lr", c.learning_rate, "peak learning rate")->capture_default_str();
    s->add_option("--min-lr-ratio", c.min_lr_ratio)->capture_default_str();
    s->add_option("--warmup", c.warmup_steps, "warmup steps")->capture_default_str();
    s->add_option("--weight-decay", c.weight_decay)->capture_default_str();
    s->add_option("--clip", c.grad_clip, "global gradient-norm clip, 0 disables")
        ->capture_default_str();
    s->add_option("--eval-interval", c.eval_interval, "tokens between evaluations")
        ->capture_default_str();
    s->add_option("--eval-tokens", c.eval_tokens, "held-out tokens per evaluation, 0 = all")
        ->capture_default_str();
    actions_["pretrain"] = [this] { run_pretrain(); };
  }

  void run_pretrain() {
    const Corpus corpus = load_corpus(pre_.corpus);
    auto cfg = pre_.cfg;
    cfg.seed = common_.seed;
    auto result = pretrain(pre_.shape.cfg, corpus, cfg, [this](const PretrainRecord& r) {
      err_ << "  tokens=" << r.tokens_seen << " lr=" << fmt("%.3g", r.learning_rate)
           << " train_loss=" << fmt("%.4f", r.train_loss)
           << " held_out_ppl=" << fmt("%.4f", r.held_out_ppl) << "\n";
    });
    save_model(result.model, out_path(common_, "model"));
    write_file(out_path(common_, "pretrain.csv"), pretrain_csv(result.records));
    out_ << "params\t" << count_params(result.model) << "\n"
         << "initial_ppl\t" << fmt("%.6g", result.records.front().held_out_ppl) << "\n"
         << "final_ppl\t" << fmt("%.6g", result.records.back().held_out_ppl) << "\n"
         << "checkpoint\t" << out_path(common_, "model") << "\n";
  }

  // -------------------------------------------------------------------- plan
  struct {
    std::string checkpoint;
    ShapeFlags shape;
    std::string strategy = "bottom";
    std::optional<double> reduction;
    std::optional<std::size_t> target;
    std::size_t min_rank = 32;
    std::size_t rank_step = 8;
  } plan_;

  void add_plan(CLI::App& app) {
    auto* s = sub(app, "plan", "allocate ranks for a target size");
    s->add_option("--checkpoint", plan_.checkpoint, "model to plan for (else the shape flags)");
    plan_.shape.add(s);
    s->add_option("--strategy", plan_.strategy, "bottom, top or uniform")
        ->capture_default_str()
        ->check(CLI::IsMember({"bottom", "top", "uniform"}));
    auto* red = s->add_option("--reduction", plan_.reduction, "fraction of parameters to remove");
    auto* tgt = s->add_option("--target-size", plan_.target, "parameter budget S");
    red->excludes(tgt);
    s->add_option("--min-rank", plan_.min_rank, "smallest rank k")->capture_default_str();
    s->add_option("--rank-step", plan_.rank_step, "rank step m")->capture_default_str();
    actions_["plan"] = [this] { run_plan(); };
  }

  void run_plan() {
    if (!plan_.reduction && !plan_.target) {
      throw ConfigError("plan needs exactly one of --reduction and --target-size");
    }
    const Model model = plan_.checkpoint.empty()
                            ? [&] {
                                Rng rng(common_.seed);
                                return init_model(plan_.shape.cfg, rng);
                              }()
                            : load_model(resolve_stem(plan_.checkpoint));
    const ModelShape shape = shape_of(model);
    const Strategy strategy = parse_strategy(plan_.strategy);
    std::size_t target = 0;
    if (plan_.reduction) {
      target = target_from_reduction(shape.total_params, *plan_.reduction);
    } else {
      target = *plan_.target;
    }
    RankPlan plan;
    if (strategy == Strategy::kUniform) {
      if (!plan_.reduction) throw ConfigError("the uniform strategy takes --reduction");
      plan = *plan_.reduction == 0.0 ? RankPlan{} : plan_uniform(shape, *plan_.reduction);
      plan.strategy = Strategy::kUniform;
    } else {
      plan = strategy == Strategy::kBottom
                 ? plan_bottom(shape, target, plan_.min_rank, plan_.rank_step)
                 : plan_top(shape, target, plan_.min_rank, plan_.rank_step);
    }
    write_plan(plan, out_path(common_, "plan.txt"));
    const std::size_t size = planned_size(plan, shape);
    // FLOPs after compression follow from the shapes alone.
    std::size_t flops = flops_per_token(model);
    for (const auto& e : plan.entries) {
      const auto [rows, cols] = matrix_shape(model.config, *parse_matrix_name(e.matrix));
      flops -= 2 * (rows * cols - e.rank * (rows + cols));
    }
    const Footprint fp = memory_footprint(plan, shape);
    out_ << "strategy\t" << to_string(plan.strategy) << "\n"
         << "entries\t" << plan.entries.size() << "\n"
         << "target_size\t" << target << "\n"
         << "dense_params\t" << shape.total_params << "\n"
         << "planned_params\t" << size << "\n"
         << "ratio\t" << fmt("%.6f", double(size) / double(shape.total_params)) << "\n"
         << "dense_flops_per_token\t" << flops_per_token(model) << "\n"
         << "planned_flops_per_token\t" << flops << "\n"
         << "resident_layers\t" << fp.resident_layers << "/" << fp.total_layers << "\n"
         << "resident_params\t" << fp.resident_params << "\n"
         << "plan\t" << out_path(common_, "plan.txt") << "\n";
  }

  // ---------------------------------------------------------------- compress
  struct {
    std::string checkpoint;
    std::string plan;
  } comp_;

  void add_compress(CLI::App& app) {
    auto* s = sub(app, "compress", "factor planned matrices by truncated SVD");
    s->add_option("--checkpoint", comp_.checkpoint, "dense model")->required();
    s->add_option("--plan", comp_.plan, "plan file")->required();
    actions_["compress"] = [this] { run_compress(); };
  }

  void run_compress() {
    const Model teacher = load_model(resolve_stem(comp_.checkpoint));
    const RankPlan plan = read_plan(fs::is_directory(comp_.plan)
                                        ? (fs::path(comp_.plan) / "plan.txt").string()
                                        : comp_.plan);
    const Model student = init_students(teacher, plan, InitMethod::kSvd);
    save_model(student, out_path(common_, "model"));
    out_ << "dense_params\t" << count_params(teacher) << "\n"
         << "params\t" << count_params(student) << "\n"
         << "predicted_params\t" << planned_size(plan, shape_of(teacher)) << "\n"
         << "ratio\t" << fmt("%.6f", double(count_params(student)) / double(count_params(teacher)))
         << "\n"
         << "checkpoint\t" << out_path(common_, "model") << "\n";
  }

  // ----------------------------------------------------------------- distill
  struct {
    std::string teacher;
    std::string student;
    std::string corpus;
    std::string strategy = "joint";
    std::string init = "svd";
    std::string order = "random";
    DistillConfig cfg;
  } dist_;

  void add_distill(CLI::App& app) {
    auto* s = sub(app, "distill", "train factored layers to mimic the teacher's layers");
    add_holdout(s);
    s->add_option("--teacher", dist_.teacher, "dense teacher")->required();
    s->add_option("--student", dist_.student, "compressed checkpoint")->required();
    s->add_option("--corpus", dist_.corpus, "calibration text")->required();
    s->add_option("--strategy", dist_.strategy, "teacher, student or joint")
        ->capture_default_str()
        ->check(CLI::IsMember({"teacher", "student", "joint"}));
    s->add_option("--init", dist_.init, "svd keeps the compressed factors; random redraws them")
        ->capture_default_str()
        ->check(CLI::IsMember({"svd", "random"}));
    s->add_option("--order", dist_.order, "random windows or one sequential pass")
        ->capture_default_str()
        ->check(CLI::IsMember({"random", "sequential"}));
    auto& c = dist_.cfg;
    s->add_option("--tokens", c.token_budget, "token budget")->capture_default_str();
    s->add_option("--lr", c.learning_rate)->capture_default_str();
    s->add_option("--batch-size", c.batch_size)->capture_default_str();
    s->add_option("--seq-len", c.seq_len)->capture_default_str();
    s->add_option("--eval-interval", c.eval_interval)->capture_default_str();
    s->add_option("--eval-tokens", c.eval_tokens, "held-out tokens per evaluation, 0 = all")
        ->capture_default_str();
    actions_["distill"] = [this] { run_distill(); };
  }

  void run_distill() {
    const Model teacher = load_model(resolve_stem(dist_.teacher));
    Model student = load_model(resolve_stem(dist_.student));
    if (!(student.config == teacher.config)) {
      throw DimensionError("student config " + format_config(student.config) +
                           " differs from teacher " + format_config(teacher.config));
    }
    const Corpus corpus = load_corpus(dist_.corpus);
    auto cfg = dist_.cfg;
    cfg.strategy = parse_feed_strategy(dist_.strategy);
    cfg.init = parse_init_method(dist_.init);
    cfg.seed = common_.seed;
    if (cfg.init == InitMethod::kRandom) {
      student = init_students(teacher, plan_of(student), InitMethod::kRandom, common_.seed);
    }
    std::unique_ptr<BatchSource> data;
    if (dist_.order == "random") {
      data = std::make_unique<RandomBatches>(corpus, cfg.batch_size, cfg.seq_len, common_.seed);
    } else {
      data = std::make_unique<SequentialBatches>(corpus, cfg.batch_size, cfg.seq_len);
    }
    const double before = perplexity(student, corpus.held_out(),
                                     std::min(cfg.seq_len, student.config.max_seq))
                              .perplexity;
    auto report = run_distillation(teacher, std::move(student), *data, corpus.held_out(), cfg,
                                   [this](const DistillRecord& r) {
                                     double total = 0.0;
                                     for (const auto& l : r.losses) total += l.total;
                                     err_ << "  tokens=" << r.tokens_seen
                                          << " loss=" << fmt("%.4f", total)
                                          << " held_out_ppl=" << fmt("%.4f", r.held_out_ppl)
                                          << "\n";
                                   });
    if (report.truncated) {
      err_ << "warning: data ran out after " << report.tokens_seen << " of " << cfg.token_budget
           << " tokens; the report is partial\n";
    }
    save_model(report.model, out_path(common_, "model"));
    write_file(out_path(common_, "distill.csv"), distill_csv(report));
    const double after = perplexity(report.model, corpus.held_out(),
                                    std::min(cfg.seq_len, report.model.config.max_seq))
                             .perplexity;
    out_ << "tokens_seen\t" << report.tokens_seen << "\n"
         << "truncated\t" << (report.truncated ? "yes" : "no") << "\n"
         << "ppl_before\t" << fmt("%.6g", before) << "\n"
         << "ppl_after\t" << fmt("%.6g", after) << "\n"
         << "checkpoint\t" << out_path(common_, "model") << "\n";
  }

  // ----------------------------------------------------------------- analyze
  struct {
    std::string checkpoint;
    std::string corpus;
    std::size_t batch = 8;
    std::size_t seq_len = 256;
  } an_;

  void add_analyze(CLI::App& app) {
    auto* s = sub(app, "analyze", "stable rank of every weight and layer activation");
    add_holdout(s);
    s->add_option("--checkpoint", an_.checkpoint)->required();
    s->add_option("--corpus", an_.corpus, "probe text")->required();
    s->add_option("--batch-size", an_.batch, "probe sequences")->capture_default_str();
    s->add_option("--seq-len", an_.seq_len)->capture_default_str();
    actions_["analyze"] = [this] { run_analyze(); };
  }

  void run_analyze() {
    const Model model = load_model(resolve_stem(an_.checkpoint));
    const Corpus corpus = load_corpus(an_.corpus);
    RandomBatches probe(corpus, an_.batch, std::min(an_.seq_len, model.config.max_seq),
                        common_.seed);
    const auto rows = srank_report(model, probe.next()->tokens);
    const std::string csv = srank_csv(rows);
    write_file(out_path(common_, "srank.csv"), csv);
    out_ << csv;
  }

  // -------------------------------------------------------------------- eval
  struct {
    std::vector<std::string> checkpoints;
    std::vector<std::string> labels;
    std::string corpus;
    std::size_t seq_len = 256;
    std::size_t batch = 4;
    std::size_t reps = 3;
  } ev_;

  void add_eval(CLI::App& app) {
    auto* s = sub(app, "eval", "perplexity, size, FLOPs, speed and fidelity of checkpoints");
    add_holdout(s);
    s->add_option("--checkpoint", ev_.checkpoints, "models; the first is the fidelity reference")
        ->required();
    s->add_option("--label", ev_.labels, "names for the checkpoints, in order");
    s->add_option("--corpus", ev_.corpus)->required();
    s->add_option("--seq-len", ev_.seq_len)->capture_default_str();
    s->add_option("--batch-size", ev_.batch, "sequences per throughput batch")
        ->capture_default_str();
    s->add_option("--reps", ev_.reps, "timed throughput repetitions, 0 skips timing")
        ->capture_default_str();
    actions_["eval"] = [this] { run_eval(); };
  }

  void run_eval() {
    if (!ev_.labels.empty() && ev_.labels.size() != ev_.checkpoints.size()) {
      throw ConfigError("got " + std::to_string(ev_.labels.size()) + " labels for " +
                        std::to_string(ev_.checkpoints.size()) + " checkpoints");
    }
    const Corpus corpus = load_corpus(ev_.corpus);
    std::vector<Model> models;
    for (const auto& c : ev_.checkpoints) models.push_back(load_model(resolve_stem(c)));
    const std::size_t seq = std::min(ev_.seq_len, models.front().config.max_seq);
    RandomBatches probe_src(corpus, ev_.batch, seq, common_.seed);
    const TokenBatch probe = probe_src.next()->tokens;
    std::vector<EvalReport> reports;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const Model& m = models[i];
      EvalReport r;
      r.label = ev_.labels.empty() ? ev_.checkpoints[i] : ev_.labels[i];
      r.perplexity = perplexity(m, corpus.held_out(), seq).perplexity;
      r.params = count_params(m);
      r.dense_params = count_params(m.config);
      r.flops_per_token = flops_per_token(m);
      if (ev_.reps > 0) r.tokens_per_second = throughput(m, probe, 1, ev_.reps).median_tokens_per_second;
      if (i > 0) r.fidelity = activation_fidelity(models.front(), m, probe);
      reports.push_back(std::move(r));
    }
    write_file(out_path(common_, "eval.csv"), eval_csv(reports));
    out_ << eval_table(reports);
  }

  // ------------------------------------------------------------------- bench
  struct {
    std::string dense;
    std::string compressed;
    std::string corpus;
    std::size_t trials = 5;
    std::size_t batch = 4;
    std::size_t seq_len = 256;
    std::size_t reps = 3;
  } bench_;

  void add_bench(CLI::App& app) {
    auto* s = sub(app, "bench", "paired dense vs compressed forward throughput");
    add_holdout(s);
    s->add_option("--dense", bench_.dense)->required();
    s->add_option("--compressed", bench_.compressed)->required();
    s->add_option("--corpus", bench_.corpus)->required();
    s->add_option("--trials", bench_.trials)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--batch-size", bench_.batch)->capture_default_str();
    s->add_option("--seq-len", bench_.seq_len)->capture_default_str();
    s->add_option("--reps", bench_.reps, "timed repetitions per trial")->capture_default_str();
    actions_["bench"] = [this] { run_bench(); };
  }

  void run_bench() {
    const Model dense = load_model(resolve_stem(bench_.dense));
    const Model comp = load_model(resolve_stem(bench_.compressed));
    const Corpus corpus = load_corpus(bench_.corpus);
    RandomBatches src(corpus, bench_.batch, std::min(bench_.seq_len, dense.config.max_seq),
                      common_.seed);
    const TokenBatch batch = src.next()->tokens;
    std::ostringstream csv;
    csv << "trial,dense_tokens_per_second,compressed_tokens_per_second,ratio\n";
    out_ << "trial  dense tok/s  compressed tok/s  ratio\n";
    std::size_t wins = 0;
    for (std::size_t t = 0; t < bench_.trials; ++t) {
      const double d = throughput(dense, batch, 1, bench_.reps).median_tokens_per_second;
      const double c = throughput(comp, batch, 1, bench_.reps).median_tokens_per_second;
      if (c >= d) ++wins;
      csv << t << "," << fmt("%.6g", d) << "," << fmt("%.6g", c) << "," << fmt("%.4f", c / d)
          << "\n";
      char line[128];
      std::snprintf(line, sizeof line, "%5zu  %11.0f  %16.0f  %5.3f\n", t, d, c, c / d);
      out_ << line;
    }
    write_file(out_path(common_, "bench.csv"), csv.str());
    out_ << "compressed faster in " << wins << "/" << bench_.trials << " trials\n";
  }
};

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput:
    case ErrorKind::kCorrupt:
      return kExitInput;
    case ErrorKind::kShape:
    case ErrorKind::kInfeasible:
    case ErrorKind::kState:
      return kExitShape;
    case ErrorKind::kNumerical:
      return kExitNumerical;
  }
  return kExitInput;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner.main(args);
}

}  // namespace lrd::cli
