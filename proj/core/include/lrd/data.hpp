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

// Byte-level tokenization, corpus splitting and batch streams.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrd/model.hpp"
#include "lrd/tensor.hpp"

namespace lrd {

inline constexpr std::size_t kByteVocab = 256;

/// Identity map from bytes to ids in [0, 256).
std::vector<std::int32_t> tokenize(std::string_view bytes);
/// Throws InputError for ids outside [0, 256).
std::string detokenize(std::span<const std::int32_t> ids);

/// A token stream with a held-out tail. The two spans are disjoint and
/// together cover the whole stream.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<std::int32_t> tokens, double holdout_frac,
         std::string source = "<memory>");

  /// Throws InputError if the file cannot be read.
  static Corpus from_file(const std::string& path, double holdout_frac = 0.02);

  const std::string& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t train_end() const noexcept { return train_end_; }
  std::span<const std::int32_t> tokens() const noexcept { return tokens_; }
  std::span<const std::int32_t> train() const noexcept {
    return std::span<const std::int32_t>(tokens_).first(train_end_);
  }
  std::span<const std::int32_t> held_out() const noexcept {
    return std::span<const std::int32_t>(tokens_).subspan(train_end_);
  }

 private:
  std::string source_;
  std::vector<std::int32_t> tokens_;
  std::size_t train_end_ = 0;
};

struct Batch {
  TokenBatch tokens;
  /// Next-token targets, same layout as tokens.ids; empty for activation-only batches.
  std::vector<std::int32_t> targets;
  /// Corpus offset of each sequence's first token.
  std::vector<std::size_t> offsets;
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  /// nullopt once the source is exhausted.
  virtual std::optional<Batch> next() = 0;
};

/// Uniformly random, non-wrapping windows from the train span. Windows are
/// seq_len long, or seq_len + 1 when targets are requested. Infinite.
class RandomBatches final : public BatchSource {
 public:
  /// Throws DataError if the train span is shorter than one window.
  RandomBatches(const Corpus& corpus, std::size_t batch_size, std::size_t seq_len,
                std::uint64_t seed, bool with_targets = false);
  std::optional<Batch> next() override;
  const RngState& rng_state() const noexcept { return rng_.state(); }

 private:
  const Corpus* corpus_;
  std::size_t batch_size_;
  std::size_t seq_len_;
  bool with_targets_;
  Rng rng_;
};

/// Consecutive non-overlapping windows through the train span; stops when the
/// next full batch no longer fits.
class SequentialBatches final : public BatchSource {
 public:
  SequentialBatches(const Corpus& corpus, std::size_t batch_size, std::size_t seq_len,
                    bool with_targets = false);
  std::optional<Batch> next() override;

 private:
  const Corpus* corpus_;
  std::size_t batch_size_;
  std::size_t seq_len_;
  bool with_targets_;
  std::size_t cursor_ = 0;
};

/// Builds a batch from explicit window starts into `tokens`.
Batch make_batch(std::span<const std::int32_t> tokens, std::span<const std::size_t> starts,
                 std::size_t seq_len, bool with_targets);

}  // namespace lrd
