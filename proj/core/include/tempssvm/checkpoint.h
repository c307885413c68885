// Copyright 2026 The tempssvm Authors.
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

// Binary checkpoint container:
//
//   "TSSVMCKP" | u32 version | u32 n + config JSON | u32 n + scheme name |
//   u32 tensor count | per tensor: u32 n + name, u64 rows, u64 cols,
//   rows*cols float64 row-major | u64 FNV-1a of all preceding bytes
//
// Integers and floats are little-endian.

#ifndef TEMPSSVM_CHECKPOINT_H_
#define TEMPSSVM_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "tempssvm/label_algebra.h"
#include "tempssvm/scoring.h"

namespace tempssvm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  // Free-form JSON object recorded by the trainer (run configuration,
  // stage, selected epoch).
  std::string run_info = "{}";
};

std::string serialize_checkpoint(const ModelParams& params, const std::string& run_info = "{}");
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& run_info = "{}");
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also checks that the checkpoint was trained under `scheme`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const LabelScheme& scheme);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& json);

}  // namespace tempssvm

#endif  // TEMPSSVM_CHECKPOINT_H_
