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

// Checkpoints: a text manifest `<stem>.manifest` plus a little-endian float32
// blob `<stem>.bin`. Manifest grammar:
//
//   version<TAB>lrd-ckpt-1
//   config<TAB>vocab=256<TAB>d_model=128<TAB>...
//   tensor<TAB>name<TAB>full|factor-A|factor-B<TAB>rows<TAB>cols<TAB>offset<TAB>length
//
// Offsets and lengths are in bytes; tensors are row-major.

#pragma once

#include <string>
#include <string_view>

#include "lrd/model.hpp"

namespace lrd {

inline constexpr std::string_view kCheckpointVersion = "lrd-ckpt-1";

std::string manifest_path(const std::string& stem);
std::string blob_path(const std::string& stem);

/// Throws InputError if either file cannot be written.
void save_model(const Model& model, const std::string& stem);

/// Throws InputError for missing files and CorruptCheckpointError, naming the
/// offending tensor, for unknown versions, truncated blobs, overlapping or
/// malformed entries, and incomplete factor pairs.
Model load_model(const std::string& stem);

/// `vocab=..<TAB>d_model=..` form used in manifests and run headers.
std::string format_config(const ModelConfig& cfg);

}  // namespace lrd
