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

#include "lrd/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lrd/errors.hpp"

namespace lrd {

namespace {

struct Candidate {
  std::size_t matrix;  // index into ModelShape::matrices
  std::size_t rank;
};

std::size_t dense_params(const MatrixShape& m) { return m.rows * m.cols; }
std::size_t factored_params(const MatrixShape& m, std::size_t r) {
  return r * (m.rows + m.cols);
}

RankPlan plan_layer_first(const ModelShape& shape, std::size_t target, std::size_t k,
                          std::size_t m, bool bottom_first) {
  if (k == 0 || m == 0) {
    throw ConfigError("rank plan: minimum rank and rank step must be positive (k=" +
                      std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  RankPlan plan;
  plan.strategy = bottom_first ? Strategy::kBottom : Strategy::kTop;
  plan.min_rank = k;
  plan.rank_step = m;
  plan.target_size = target;
  plan.reduction = shape.total_params
                       ? 1.0 - static_cast<double>(target) / static_cast<double>(shape.total_params)
                       : 0.0;
  if (target >= shape.total_params) return plan;

  std::vector<Candidate> stack;
  long long floor_size = static_cast<long long>(shape.total_params);
  for (std::size_t i = 0; i < shape.matrices.size(); ++i) {
    const MatrixShape& w = shape.matrices[i];
    const std::size_t bound = std::min(w.rows, w.cols);
    bool any = false;
    for (std::size_t r = k; r <= bound; r += m) {
      if (!saves_parameters(r, w.rows, w.cols)) continue;
      stack.push_back({i, r});
      any = true;
    }
    if (any) {
      floor_size -= static_cast<long long>(dense_params(w) - factored_params(w, k));
    }
  }
  // The smallest candidate of every matrix is k itself whenever any exists,
  // since factored size grows with r.
  if (floor_size > static_cast<long long>(target)) {
    throw InfeasibleTargetError("rank plan: target size " + std::to_string(target) +
                                    " unreachable; floor with every matrix at rank " +
                                    std::to_string(k) + " is " + std::to_string(floor_size),
                                floor_size);
  }

  std::stable_sort(stack.begin(), stack.end(), [&](const Candidate& a, const Candidate& b) {
    const std::size_t la = shape.matrices[a.matrix].layer;
    const std::size_t lb = shape.matrices[b.matrix].layer;
    if (la != lb) return bottom_first ? la < lb : la > lb;
    if (a.rank != b.rank) return a.rank > b.rank;
    return a.matrix < b.matrix;
  });

  std::vector<std::size_t> current(shape.matrices.size(), 0);  // 0 = dense
  std::vector<std::size_t> order;  // first-compression order
  std::size_t size = shape.total_params;
  for (const Candidate& c : stack) {
    if (size <= target) break;
    const MatrixShape& w = shape.matrices[c.matrix];
    const std::size_t before =
        current[c.matrix] ? factored_params(w, current[c.matrix]) : dense_params(w);
    const std::size_t after = factored_params(w, c.rank);
    if (after >= before) continue;
    if (!current[c.matrix]) order.push_back(c.matrix);
    current[c.matrix] = c.rank;
    size -= before - after;
  }
  for (std::size_t i : order) {
    plan.entries.push_back({shape.matrices[i].layer, shape.matrices[i].name, current[i]});
  }
  return plan;
}

}  // namespace

ModelShape shape_of(const ModelConfig& cfg) {
  cfg.validate();
  ModelShape s;
  s.n_layers = cfg.n_layers;
  s.total_params = count_params(cfg);
  s.embedding_params = (cfg.vocab + cfg.max_seq) * cfg.d_model;
  s.head_params = cfg.vocab * cfg.d_model + cfg.d_model;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    std::size_t layer_total = 2 * cfg.d_model;
    for (MatrixName n : kMatrixNames) {
      const auto [r, c] = matrix_shape(cfg, n);
      s.matrices.push_back({l, std::string(to_string(n)), r, c});
      layer_total += r * c;
    }
    s.layer_params.push_back(layer_total);
  }
  return s;
}

ModelShape shape_of(const Model& model) {
  ModelShape s;
  s.n_layers = model.layers.size();
  s.total_params = count_params(model);
  s.embedding_params = model.tok_embed.size() + model.pos_embed.size();
  s.head_params = model.head.size() + model.final_norm.size();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LayerWeights& layer = model.layers[l];
    for (MatrixName n : kMatrixNames) {
      const Weight& w = layer[n];
      if (is_factored(w)) continue;
      s.matrices.push_back({l, std::string(to_string(n)), weight_rows(w), weight_cols(w)});
    }
    s.layer_params.push_back(count_layer_params(layer));
  }
  return s;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kBottom: return "bottom";
    case Strategy::kTop: return "top";
    case Strategy::kUniform: return "uniform";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "bottom") return Strategy::kBottom;
  if (text == "top") return Strategy::kTop;
  if (text == "uniform") return Strategy::kUniform;
  throw ConfigError("unknown rank strategy '" + std::string(text) +
                    "' (expected bottom, top or uniform)");
}

std::size_t target_from_reduction(std::size_t total, double reduction) {
  if (!(reduction >= 0.0 && reduction < 1.0)) {
    throw ConfigError("reduction must lie in [0, 1), got " + std::to_string(reduction));
  }
  // Small slack keeps e.g. 0.8 * 10000 from flooring to 7999.
  const long double kept = (1.0L - static_cast<long double>(reduction)) * total;
  return static_cast<std::size_t>(std::floor(kept + 1e-9L));
}

RankPlan plan_bottom(const ModelShape& shape, std::size_t target_size, std::size_t min_rank,
                     std::size_t rank_step) {
  return plan_layer_first(shape, target_size, min_rank, rank_step, true);
}

RankPlan plan_top(const ModelShape& shape, std::size_t target_size, std::size_t min_rank,
                  std::size_t rank_step) {
  return plan_layer_first(shape, target_size, min_rank, rank_step, false);
}

RankPlan plan_uniform(const ModelShape& shape, double reduction) {
  if (!(reduction > 0.0 && reduction < 1.0)) {
    throw ConfigError("uniform plan: reduction must lie in (0, 1), got " +
                      std::to_string(reduction));
  }
  RankPlan plan;
  plan.strategy = Strategy::kUniform;
  plan.reduction = reduction;
  for (const MatrixShape& w : shape.matrices) {
    const long double budget = (1.0L - static_cast<long double>(reduction)) *
                               static_cast<long double>(w.rows * w.cols);
    const auto r = static_cast<std::size_t>(
        std::floor(budget / static_cast<long double>(w.rows + w.cols) + 1e-9L));
    if (r < 1 || !saves_parameters(r, w.rows, w.cols)) continue;
    plan.entries.push_back({w.layer, w.name, r});
  }
  plan.target_size = planned_size(plan, shape);
  return plan;
}

void check_plan(const RankPlan& plan, const ModelShape& shape) {
  std::map<std::pair<std::size_t, std::string>, const MatrixShape*> index;
  for (const MatrixShape& m : shape.matrices) index[{m.layer, m.name}] = &m;
  std::map<std::pair<std::size_t, std::string>, int> seen;
  for (const PlanEntry& e : plan.entries) {
    auto it = index.find({e.layer, e.matrix});
    if (it == index.end()) {
      throw DimensionError("plan entry layer " + std::to_string(e.layer) + " " + e.matrix +
                           " does not name a dense matrix of this model");
    }
    if (++seen[{e.layer, e.matrix}] > 1) {
      throw DimensionError("plan names layer " + std::to_string(e.layer) + " " + e.matrix +
                           " twice");
    }
    const MatrixShape& w = *it->second;
    if (e.rank < 1 || !saves_parameters(e.rank, w.rows, w.cols)) {
      throw DimensionError("plan rank " + std::to_string(e.rank) + " for layer " +
                           std::to_string(e.layer) + " " + e.matrix + " (" +
                           std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                           ") does not save parameters");
    }
  }
}

std::size_t planned_size(const RankPlan& plan, const ModelShape& shape) {
  check_plan(plan, shape);
  std::size_t size = shape.total_params;
  for (const PlanEntry& e : plan.entries) {
    for (const MatrixShape& w : shape.matrices) {
      if (w.layer == e.layer && w.name == e.matrix) {
        size -= dense_params(w) - factored_params(w, e.rank);
        break;
      }
    }
  }
  return size;
}

Footprint memory_footprint(const RankPlan& plan, const ModelShape& shape) {
  check_plan(plan, shape);
  Footprint f;
  f.total_layers = shape.n_layers;
  if (plan.entries.empty()) return f;

  std::vector<std::size_t> savings(shape.n_layers, 0);
  std::vector<bool> compressed(shape.n_layers, false);
  std::size_t deepest = 0;
  for (const PlanEntry& e : plan.entries) {
    for (const MatrixShape& w : shape.matrices) {
      if (w.layer == e.layer && w.name == e.matrix) {
        savings[e.layer] += dense_params(w) - factored_params(w, e.rank);
        break;
      }
    }
    compressed[e.layer] = true;
    deepest = std::max(deepest, e.layer);
  }
  const bool prefix_only = plan.strategy == Strategy::kBottom;
  f.resident_layers = prefix_only ? deepest + 1 : shape.n_layers;
  f.resident_params = shape.embedding_params + (prefix_only ? 0 : shape.head_params);
  for (std::size_t l = 0; l < f.resident_layers; ++l) {
    f.resident_params += shape.layer_params[l];
    if (compressed[l]) f.resident_params += shape.layer_params[l] - savings[l];
  }
  return f;
}

std::string format_plan(const RankPlan& plan) {
  std::ostringstream out;
  out << '#' << to_string(plan.strategy) << ' ' << plan.min_rank << ' ' << plan.rank_step
      << ' ' << plan.target_size << '\n';
  for (const PlanEntry& e : plan.entries) {
    out << e.layer << '\t' << e.matrix << '\t' << e.rank << '\n';
  }
  return out.str();
}

RankPlan parse_plan(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw InputError("plan: missing '#strategy k m S' header");
  }
  RankPlan plan;
  {
    std::istringstream header(line.substr(1));
    std::string strategy;
    if (!(header >> strategy >> plan.min_rank >> plan.rank_step >> plan.target_size)) {
      throw InputError("plan: malformed header '" + line + "'");
    }
    try {
      plan.strategy = parse_strategy(strategy);
    } catch (const ConfigError& e) {
      throw InputError(std::string("plan: ") + e.what());
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string layer, matrix, rank;
    if (!std::getline(row, layer, '\t') || !std::getline(row, matrix, '\t') ||
        !std::getline(row, rank, '\t')) {
      throw InputError("plan: line " + std::to_string(line_no) + " is not layer<TAB>matrix<TAB>rank");
    }
    try {
      std::size_t used = 0;
      PlanEntry e;
      e.layer = std::stoul(layer, &used);
      if (used != layer.size()) throw std::invalid_argument(layer);
      e.matrix = matrix;
      e.rank = std::stoul(rank, &used);
      if (used != rank.size()) throw std::invalid_argument(rank);
      plan.entries.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw InputError("plan: line " + std::to_string(line_no) + " has a non-numeric field");
    }
  }
  return plan;
}

void write_plan(const RankPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write plan file " + path);
  out << format_plan(plan);
  if (!out) throw InputError("failed writing plan file " + path);
}

RankPlan read_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read plan file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

}  // namespace lrd
