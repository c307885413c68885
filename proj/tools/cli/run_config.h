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

// Flat key=value run configuration shared by every subcommand.
//
//   # comment
//   scheme = data/schemes/dense.scheme
//   train = corpora/train.jsonl
//   hashed = true
//   seeds = 1,2,3
//
// Values from a file are layered under `--set key=value` overrides. Relative
// paths in a file resolve against the file's directory.

#ifndef TEMPSSVM_TOOLS_RUN_CONFIG_H_
#define TEMPSSVM_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tempssvm/corpus.h"
#include "tempssvm/label_algebra.h"
#include "tempssvm/learning.h"

namespace tempssvm::cli {

inline constexpr const char* kConfigEnv = "TEMPSSVM_CONFIG";

struct KeyInfo {
  std::string_view name;
  std::string_view help;
  bool is_path = false;
};

// Every accepted key, in documentation order.
const std::vector<KeyInfo>& known_keys();

class RunConfig {
 public:
  // Throws ConfigError on a malformed line, an unknown or repeated key.
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {},
                         const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  // "key=value"; later calls win.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  // Throws ConfigError with `key` in the message when unset.
  std::string require(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

  int get_int(std::string_view key, int fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key) const;

  // A built-in scheme name ("dense", "start_point") or a scheme file.
  LabelScheme scheme() const;
  // Sidecar file or hashed vectors; neither configured is a ConfigError.
  EmbeddingSource embeddings() const;
  // Preset first, then every training key that is set.
  TrainConfig train_config() const;

  // Throws ConfigError for a listed path key that is set but missing on disk.
  void check_paths(const std::vector<std::string_view>& keys) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& items);
std::vector<std::string> split_list(std::string_view s);

}  // namespace tempssvm::cli

#endif  // TEMPSSVM_TOOLS_RUN_CONFIG_H_
