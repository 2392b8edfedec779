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

#include "lrd/data.hpp"

#include <fstream>
#include <iterator>

#include "lrd/errors.hpp"

namespace lrd {

std::vector<std::int32_t> tokenize(std::string_view bytes) {
  std::vector<std::int32_t> ids(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    ids[i] = static_cast<std::uint8_t>(bytes[i]);
  }
  return ids;
}

std::string detokenize(std::span<const std::int32_t> ids) {
  std::string out(ids.size(), '\0');
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= static_cast<std::int32_t>(kByteVocab)) {
      throw InputError("token id " + std::to_string(ids[i]) + " at position " +
                       std::to_string(i) + " is not a byte");
    }
    out[i] = static_cast<char>(static_cast<std::uint8_t>(ids[i]));
  }
  return out;
}

Corpus::Corpus(std::vector<std::int32_t> tokens, double holdout_frac, std::string source)
    : source_(std::move(source)), tokens_(std::move(tokens)) {
  if (!(holdout_frac >= 0.0 && holdout_frac < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1), got " +
                      std::to_string(holdout_frac));
  }
  const auto held = static_cast<std::size_t>(static_cast<double>(tokens_.size()) * holdout_frac);
  train_end_ = tokens_.size() - held;
}

Corpus Corpus::from_file(const std::string& path, double holdout_frac) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw InputError("error while reading corpus file " + path);
  return Corpus(tokenize(bytes), holdout_frac, path);
}

Batch make_batch(std::span<const std::int32_t> tokens, std::span<const std::size_t> starts,
                 std::size_t seq_len, bool with_targets) {
  Batch b;
  b.tokens.batch = starts.size();
  b.tokens.seq_len = seq_len;
  b.tokens.ids.reserve(starts.size() * seq_len);
  if (with_targets) b.targets.reserve(starts.size() * seq_len);
  const std::size_t need = seq_len + (with_targets ? 1 : 0);
  for (std::size_t s : starts) {
    if (s + need > tokens.size()) {
      throw DataError("window at " + std::to_string(s) + " of length " + std::to_string(need) +
                      " overruns a span of " + std::to_string(tokens.size()) + " tokens");
    }
    b.tokens.ids.insert(b.tokens.ids.end(), tokens.begin() + s, tokens.begin() + s + seq_len);
    if (with_targets) {
      b.targets.insert(b.targets.end(), tokens.begin() + s + 1,
                       tokens.begin() + s + seq_len + 1);
    }
    b.offsets.push_back(s);
  }
  return b;
}

RandomBatches::RandomBatches(const Corpus& corpus, std::size_t batch_size, std::size_t seq_len,
                             std::uint64_t seed, bool with_targets)
    : corpus_(&corpus),
      batch_size_(batch_size),
      seq_len_(seq_len),
      with_targets_(with_targets),
      rng_(seed) {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("batch size and seq_len must be positive");
  const std::size_t need = seq_len + (with_targets ? 1 : 0);
  if (corpus.train().size() < need) {
    throw DataError("train span of " + std::to_string(corpus.train().size()) +
                    " tokens is shorter than one window of " + std::to_string(need));
  }
}

std::optional<Batch> RandomBatches::next() {
  const std::size_t need = seq_len_ + (with_targets_ ? 1 : 0);
  const std::size_t n_starts = corpus_->train().size() - need + 1;
  std::vector<std::size_t> starts(batch_size_);
  for (auto& s : starts) s = rng_.uniform_int(n_starts);
  return make_batch(corpus_->train(), starts, seq_len_, with_targets_);
}

SequentialBatches::SequentialBatches(const Corpus& corpus, std::size_t batch_size,
                                     std::size_t seq_len, bool with_targets)
    : corpus_(&corpus), batch_size_(batch_size), seq_len_(seq_len), with_targets_(with_targets) {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("batch size and seq_len must be positive");
  const std::size_t need = seq_len + (with_targets ? 1 : 0);
  if (corpus.train().size() < need) {
    throw DataError("train span of " + std::to_string(corpus.train().size()) +
                    " tokens is shorter than one window of " + std::to_string(need));
  }
}

std::optional<Batch> SequentialBatches::next() {
  const std::size_t span = corpus_->train().size();
  const std::size_t extra = with_targets_ ? 1 : 0;
  if (cursor_ + batch_size_ * seq_len_ + extra > span) return std::nullopt;
  std::vector<std::size_t> starts(batch_size_);
  for (auto& s : starts) {
    s = cursor_;
    cursor_ += seq_len_;
  }
  return make_batch(corpus_->train(), starts, seq_len_, with_targets_);
}

}  // namespace lrd
