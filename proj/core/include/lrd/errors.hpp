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

#pragma once

#include <stdexcept>
#include <string>

namespace lrd {

/// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kInput,       // bad user input, unreadable file, invalid token
  kShape,       // dimension / rank / plan-vs-model mismatch
  kInfeasible,  // a compression target that cannot be met
  kState,       // operation invoked in the wrong state
  kNumerical,   // non-convergence, non-finite values
  kCorrupt,     // checkpoint failed validation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorKind::kShape, w) {}
};
struct RankError : Error {
  explicit RankError(const std::string& w) : Error(ErrorKind::kShape, w) {}
};
struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorKind::kInput, w) {}
};
/// Not enough samples / tokens for the requested statistic or batch.
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::kInput, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kInput, w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error(ErrorKind::kState, w) {}
};
struct GraphError : Error {
  explicit GraphError(const std::string& w) : Error(ErrorKind::kState, w) {}
};
struct NumericalError : Error {
  NumericalError(const std::string& w, double residual)
      : Error(ErrorKind::kNumerical, w), residual_(residual) {}
  explicit NumericalError(const std::string& w)
      : NumericalError(w, 0.0) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};
struct InfeasibleTargetError : Error {
  InfeasibleTargetError(const std::string& w, long long floor_size)
      : Error(ErrorKind::kInfeasible, w), floor_size_(floor_size) {}
  /// Smallest size reachable with every candidate matrix at the minimum rank.
  long long floor_size() const noexcept { return floor_size_; }

 private:
  long long floor_size_;
};
struct CorruptCheckpointError : Error {
  explicit CorruptCheckpointError(const std::string& w)
      : Error(ErrorKind::kCorrupt, w) {}
};

}  // namespace lrd
