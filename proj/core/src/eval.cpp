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

#include "lrd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lrd/errors.hpp"
#include "lrd/linalg.hpp"

namespace lrd {

namespace {

// Negative log-likelihood of `target` under one row of logits, in double.
double row_nll(std::span<const float> logits, std::int32_t target) {
  double mx = logits[0];
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0.0;
  for (float v : logits) z += std::exp(static_cast<double>(v) - mx);
  return std::log(z) + mx - static_cast<double>(logits[static_cast<std::size_t>(target)]);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace

PerplexityResult perplexity(const Model& model, std::span<const std::int32_t> tokens,
                            std::size_t seq_len, std::size_t windows_per_batch) {
  if (tokens.size() < 2) {
    throw DataError("perplexity needs at least 2 tokens, span has " +
                    std::to_string(tokens.size()));
  }
  if (seq_len == 0 || seq_len > model.config.max_seq) {
    throw ConfigError("perplexity: seq_len " + std::to_string(seq_len) + " outside [1, " +
                      std::to_string(model.config.max_seq) + "]");
  }
  windows_per_batch = std::max<std::size_t>(windows_per_batch, 1);
  const std::size_t n_targets = tokens.size() - 1;
  const std::size_t full = n_targets / seq_len;
  const std::size_t tail = n_targets % seq_len;

  double nll = 0.0;
  auto run = [&](std::size_t first_window, std::size_t count, std::size_t len) {
    TokenBatch b;
    b.batch = count;
    b.seq_len = len;
    b.ids.reserve(count * len);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t s = (first_window + w) * seq_len;
      b.ids.insert(b.ids.end(), tokens.begin() + s, tokens.begin() + s + len);
    }
    const Matrix logits = forward_logits(model, b);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t s = (first_window + w) * seq_len;
      for (std::size_t t = 0; t < len; ++t) nll += row_nll(logits.row(w * len + t), tokens[s + t + 1]);
    }
  };
  for (std::size_t w = 0; w < full; w += windows_per_batch) {
    run(w, std::min(windows_per_batch, full - w), seq_len);
  }
  if (tail > 0) run(full, 1, tail);

  PerplexityResult r;
  r.tokens = n_targets;
  r.mean_nll = nll / static_cast<double>(n_targets);
  r.perplexity = std::exp(r.mean_nll);
  if (!std::isfinite(r.perplexity)) {
    throw NumericalError("perplexity is not finite (mean nll " + fmt(r.mean_nll) + ")");
  }
  return r;
}

std::vector<SrankRow> srank_report(const Model& model, const TokenBatch& probe) {
  std::vector<SrankRow> rows;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (MatrixName n : kMatrixNames) {
      const Matrix w = dense(model.layers[l][n]);
      rows.push_back({"weight", l, std::string(to_string(n)), w.rows(), w.cols(), stable_rank(w)});
    }
  }
  const ForwardResult fwd = forward_with_taps(model, probe);
  for (std::size_t l = 0; l < fwd.taps.size(); ++l) {
    const Matrix& a = fwd.taps[l];
    rows.push_back({"activation", l, "output", a.rows(), a.cols(), stable_rank(a)});
  }
  return rows;
}

std::string srank_csv(const std::vector<SrankRow>& rows) {
  std::ostringstream out;
  out << "kind,layer,name,rows,cols,srank\n";
  for (const auto& r : rows) {
    out << r.kind << ',' << r.layer << ',' << r.name << ',' << r.rows << ',' << r.cols << ','
        << fmt(r.srank, 9) << '\n';
  }
  return out.str();
}

std::size_t layer_flops(const LayerWeights& layer, const ModelConfig& cfg, std::size_t context) {
  std::size_t f = 0;
  for (const auto& w : layer.proj) f += weight_flops(w);
  // q.k scores and probability-weighted values over the visible context.
  f += 4 * context * cfg.d_model;
  return f;
}

std::size_t flops_per_token(const Model& model, std::size_t context) {
  std::size_t f = 2 * model.config.vocab * model.config.d_model;
  for (const auto& layer : model.layers) f += layer_flops(layer, model.config, context);
  return f;
}

std::size_t flops_per_token(const Model& model) {
  return flops_per_token(model, model.config.max_seq);
}

ThroughputResult throughput(const Model& model, const TokenBatch& batch, std::size_t warmup,
                            std::size_t reps) {
  using Clock = std::chrono::steady_clock;
  validate_batch(model.config, batch);
  reps = std::max<std::size_t>(reps, 1);
  float sink = 0.0f;
  for (std::size_t i = 0; i < warmup; ++i) sink += forward_logits(model, batch)(0, 0);
  ThroughputResult r;
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    sink += forward_logits(model, batch)(0, 0);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    r.samples.push_back(static_cast<double>(batch.ids.size()) / std::max(secs, 1e-12));
  }
  if (!std::isfinite(sink)) throw NumericalError("throughput: forward produced non-finite logits");
  r.median_tokens_per_second = quantile(r.samples, 0.5);
  r.iqr_tokens_per_second = quantile(r.samples, 0.75) - quantile(r.samples, 0.25);
  return r;
}

std::vector<LayerFidelity> activation_fidelity(const Model& reference, const Model& model,
                                               const TokenBatch& probe) {
  if (!(reference.config == model.config)) {
    throw DimensionError("activation_fidelity: models have different configs");
  }
  const ForwardResult a = forward_with_taps(reference, probe);
  const ForwardResult b = forward_with_taps(model, probe);
  std::vector<LayerFidelity> out;
  for (std::size_t l = 0; l < a.taps.size(); ++l) {
    const auto cos = cosine_rows(a.taps[l], b.taps[l]);
    double mean_cos = 0.0;
    for (float c : cos) mean_cos += c;
    mean_cos /= static_cast<double>(cos.size());
    const double l1 = abs_sum(sub(a.taps[l], b.taps[l])) / static_cast<double>(a.taps[l].size());
    out.push_back({l, mean_cos, l1});
  }
  return out;
}

std::string eval_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "model,perplexity,params,dense_params,flops_per_token,tokens_per_second,layer,"
         "cosine,l1\n";
  for (const auto& r : reports) {
    const std::string head = r.label + ',' + fmt(r.perplexity, 9) + ',' +
                             std::to_string(r.params) + ',' + std::to_string(r.dense_params) +
                             ',' + std::to_string(r.flops_per_token) + ',' +
                             fmt(r.tokens_per_second) + ',';
    if (r.fidelity.empty()) {
      out << head << ",,\n";
      continue;
    }
    for (const auto& f : r.fidelity) {
      out << head << f.layer << ',' << fmt(f.cosine, 9) << ',' << fmt(f.l1, 9) << '\n';
    }
  }
  return out.str();
}

std::string eval_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %12s %10s %8s %14s %12s %10s\n", "model", "perplexity",
                "params", "ratio", "flops/token", "tokens/s", "mean cos");
  out << line;
  for (const auto& r : reports) {
    double mean_cos = 0.0;
    for (const auto& f : r.fidelity) mean_cos += f.cosine;
    if (!r.fidelity.empty()) mean_cos /= static_cast<double>(r.fidelity.size());
    const double ratio =
        r.dense_params ? static_cast<double>(r.params) / static_cast<double>(r.dense_params) : 0.0;
    std::snprintf(line, sizeof line, "%-20s %12.4f %10zu %8.4f %14zu %12.0f %10s\n",
                  r.label.c_str(), r.perplexity, r.params, ratio, r.flops_per_token,
                  r.tokens_per_second, r.fidelity.empty() ? "-" : fmt(mean_cos, 5).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace lrd
