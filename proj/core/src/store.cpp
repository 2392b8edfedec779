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

#include "lrd/store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <vector>

#include "lrd/errors.hpp"

namespace lrd {

namespace {

enum class Kind { kFull, kFactorA, kFactorB };

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::kFull: return "full";
    case Kind::kFactorA: return "factor-A";
    case Kind::kFactorB: return "factor-B";
  }
  return "?";
}

struct Entry {
  std::string name;
  Kind kind = Kind::kFull;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void append_floats(std::string& blob, const Matrix& m) {
  const std::size_t base = blob.size();
  blob.resize(base + m.size() * 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(m.data()[i]));
    std::memcpy(blob.data() + base + 4 * i, &bits, 4);
  }
}

Matrix read_floats(const std::string& blob, const Entry& e) {
  Matrix m(e.rows, e.cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, blob.data() + e.offset + 4 * i, 4);
    m.data()[i] = std::bit_cast<float>(to_le(bits));
  }
  return m;
}

std::string layer_name(std::size_t layer, std::string_view what) {
  return "layers." + std::to_string(layer) + "." + std::string(what);
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  std::size_t v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text[0] == '-') {
    throw CorruptCheckpointError("manifest field " + what + " is not a non-negative integer: '" +
                                 text + "'");
  }
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint file " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

std::string manifest_path(const std::string& stem) { return stem + ".manifest"; }
std::string blob_path(const std::string& stem) { return stem + ".bin"; }

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "vocab=" << cfg.vocab << "\td_model=" << cfg.d_model << "\tn_layers=" << cfg.n_layers
      << "\tn_heads=" << cfg.n_heads << "\td_ff=" << cfg.d_ff << "\tmax_seq=" << cfg.max_seq;
  return out.str();
}

void save_model(const Model& model, const std::string& stem) {
  std::string blob;
  std::ostringstream manifest;
  manifest << "version\t" << kCheckpointVersion << "\n";
  manifest << "config\t" << format_config(model.config) << "\n";
  auto put = [&](const std::string& name, Kind kind, const Matrix& m) {
    const std::size_t offset = blob.size();
    append_floats(blob, m);
    manifest << "tensor\t" << name << '\t' << kind_name(kind) << '\t' << m.rows() << '\t'
             << m.cols() << '\t' << offset << '\t' << blob.size() - offset << "\n";
  };
  put("tok_embed", Kind::kFull, model.tok_embed);
  put("pos_embed", Kind::kFull, model.pos_embed);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LayerWeights& layer = model.layers[l];
    put(layer_name(l, "attn_norm"), Kind::kFull, layer.attn_norm);
    put(layer_name(l, "mlp_norm"), Kind::kFull, layer.mlp_norm);
    for (MatrixName n : kMatrixNames) {
      const std::string name = layer_name(l, to_string(n));
      if (const auto* f = std::get_if<LowRankFactor>(&layer[n])) {
        put(name, Kind::kFactorA, f->a);
        put(name, Kind::kFactorB, f->b);
      } else {
        put(name, Kind::kFull, std::get<Matrix>(layer[n]));
      }
    }
  }
  put("final_norm", Kind::kFull, model.final_norm);
  put("head", Kind::kFull, model.head);

  {
    std::ofstream out(blob_path(stem), std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint file " + blob_path(stem));
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw InputError("failed writing checkpoint file " + blob_path(stem));
  }
  std::ofstream out(manifest_path(stem), std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint file " + manifest_path(stem));
  out << manifest.str();
  if (!out) throw InputError("failed writing checkpoint file " + manifest_path(stem));
}

Model load_model(const std::string& stem) {
  const std::string text = read_file(manifest_path(stem));
  const std::string blob = read_file(blob_path(stem));

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CorruptCheckpointError("empty manifest " + manifest_path(stem));
  {
    const auto f = split_tabs(line);
    if (f.size() != 2 || f[0] != "version") {
      throw CorruptCheckpointError("manifest does not start with a version line");
    }
    if (f[1] != kCheckpointVersion) {
      throw CorruptCheckpointError("unsupported checkpoint version '" + f[1] + "' (expected " +
                                   std::string(kCheckpointVersion) + ")");
    }
  }

  ModelConfig cfg;
  if (!std::getline(in, line)) throw CorruptCheckpointError("manifest has no config line");
  {
    const auto f = split_tabs(line);
    if (f.empty() || f[0] != "config") throw CorruptCheckpointError("second manifest line is not config");
    std::map<std::string, std::size_t*> keys = {
        {"vocab", &cfg.vocab},     {"d_model", &cfg.d_model}, {"n_layers", &cfg.n_layers},
        {"n_heads", &cfg.n_heads}, {"d_ff", &cfg.d_ff},       {"max_seq", &cfg.max_seq}};
    std::map<std::string, bool> seen;
    for (std::size_t i = 1; i < f.size(); ++i) {
      const auto eq = f[i].find('=');
      const std::string key = f[i].substr(0, eq);
      auto it = keys.find(key);
      if (eq == std::string::npos || it == keys.end() || seen[key]) {
        throw CorruptCheckpointError("bad config field '" + f[i] + "'");
      }
      *it->second = parse_size(f[i].substr(eq + 1), key);
      seen[key] = true;
    }
    if (seen.size() != keys.size()) throw CorruptCheckpointError("config line is missing fields");
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      throw CorruptCheckpointError(std::string("invalid config: ") + e.what());
    }
  }

  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 7 || f[0] != "tensor") {
      throw CorruptCheckpointError("malformed manifest line '" + line + "'");
    }
    Entry e;
    e.name = f[1];
    if (f[2] == "full") e.kind = Kind::kFull;
    else if (f[2] == "factor-A") e.kind = Kind::kFactorA;
    else if (f[2] == "factor-B") e.kind = Kind::kFactorB;
    else throw CorruptCheckpointError("tensor " + e.name + ": unknown kind '" + f[2] + "'");
    e.rows = parse_size(f[3], e.name + " rows");
    e.cols = parse_size(f[4], e.name + " cols");
    e.offset = parse_size(f[5], e.name + " offset");
    e.length = parse_size(f[6], e.name + " length");
    if (e.length != e.rows * e.cols * 4) {
      throw CorruptCheckpointError("tensor " + e.name + ": length " + std::to_string(e.length) +
                                   " does not match " + std::to_string(e.rows) + "x" +
                                   std::to_string(e.cols) + " float32");
    }
    if (e.offset > blob.size() || e.length > blob.size() - e.offset) {
      throw CorruptCheckpointError("tensor " + e.name + ": blob truncated (needs bytes up to " +
                                   std::to_string(e.offset + e.length) + ", blob has " +
                                   std::to_string(blob.size()) + ")");
    }
    entries.push_back(std::move(e));
  }

  {
    std::vector<const Entry*> by_offset;
    for (const Entry& e : entries) by_offset.push_back(&e);
    std::sort(by_offset.begin(), by_offset.end(),
              [](const Entry* a, const Entry* b) { return a->offset < b->offset; });
    for (std::size_t i = 1; i < by_offset.size(); ++i) {
      const Entry& prev = *by_offset[i - 1];
      if (prev.length > 0 && prev.offset + prev.length > by_offset[i]->offset) {
        throw CorruptCheckpointError("tensor " + by_offset[i]->name + " overlaps tensor " +
                                     prev.name);
      }
    }
  }

  std::map<std::pair<std::string, Kind>, const Entry*> table;
  for (const Entry& e : entries) {
    if (!table.emplace(std::make_pair(e.name, e.kind), &e).second) {
      throw CorruptCheckpointError("tensor " + e.name + " (" + std::string(kind_name(e.kind)) +
                                   ") appears twice");
    }
  }
  std::map<std::string, bool> used;
  auto full = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = table.find({name, Kind::kFull});
    if (it == table.end()) throw CorruptCheckpointError("tensor " + name + " is missing");
    const Entry& e = *it->second;
    if (e.rows != rows || e.cols != cols) {
      throw CorruptCheckpointError("tensor " + name + " has shape " + std::to_string(e.rows) +
                                   "x" + std::to_string(e.cols) + ", expected " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
    }
    used[name] = true;
    return read_floats(blob, e);
  };
  auto weight = [&](const std::string& name, std::size_t rows, std::size_t cols) -> Weight {
    auto a = table.find({name, Kind::kFactorA});
    auto b = table.find({name, Kind::kFactorB});
    const bool has_full = table.count({name, Kind::kFull}) > 0;
    if (a == table.end() && b == table.end()) return full(name, rows, cols);
    if (a == table.end() || b == table.end()) {
      throw CorruptCheckpointError("tensor " + name + " has an incomplete factor pair");
    }
    if (has_full) throw CorruptCheckpointError("tensor " + name + " is stored both full and factored");
    const Entry& ea = *a->second;
    const Entry& eb = *b->second;
    if (ea.rows != rows || eb.cols != cols || ea.cols != eb.rows || ea.cols == 0) {
      throw CorruptCheckpointError("tensor " + name + ": factor shapes " + std::to_string(ea.rows) +
                                   "x" + std::to_string(ea.cols) + " and " +
                                   std::to_string(eb.rows) + "x" + std::to_string(eb.cols) +
                                   " do not form a " + std::to_string(rows) + "x" +
                                   std::to_string(cols) + " pair");
    }
    used[name] = true;
    return LowRankFactor{read_floats(blob, ea), read_floats(blob, eb)};
  };

  Model model;
  model.config = cfg;
  model.tok_embed = full("tok_embed", cfg.vocab, cfg.d_model);
  model.pos_embed = full("pos_embed", cfg.max_seq, cfg.d_model);
  model.layers.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerWeights& layer = model.layers[l];
    layer.attn_norm = full(layer_name(l, "attn_norm"), 1, cfg.d_model);
    layer.mlp_norm = full(layer_name(l, "mlp_norm"), 1, cfg.d_model);
    for (MatrixName n : kMatrixNames) {
      const auto [r, c] = matrix_shape(cfg, n);
      layer[n] = weight(layer_name(l, to_string(n)), r, c);
    }
  }
  model.final_norm = full("final_norm", 1, cfg.d_model);
  model.head = full("head", cfg.vocab, cfg.d_model);

  for (const Entry& e : entries) {
    if (!used.count(e.name)) throw CorruptCheckpointError("tensor " + e.name + " is not part of the model");
  }
  return model;
}

}  // namespace lrd
