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

#include "run_config.h"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tempssvm/error.h"

namespace tempssvm::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const KeyInfo* find_key(std::string_view name) {
  for (const auto& k : known_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool is_builtin_scheme(std::string_view v) { return v == "dense" || v == "start_point"; }

std::string resolve(const std::string& key, const std::string& value, const std::filesystem::path& base) {
  const KeyInfo* info = find_key(key);
  if (!info || !info->is_path || base.empty() || value.empty()) return value;
  if (key == "scheme" && is_builtin_scheme(value)) return value;
  const std::filesystem::path p(value);
  return p.is_absolute() ? value : (base / p).lexically_normal().string();
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"scheme", "built-in scheme (dense, start_point) or scheme file", true},
      {"train", "training corpus (JSONL)", true},
      {"dev", "development corpus (JSONL)", true},
      {"test", "test corpus (JSONL)", true},
      {"embeddings", "word-vector sidecar file", true},
      {"hashed", "use hashed word vectors when no sidecar is given", false},
      {"hashed_dim", "dimension of hashed word vectors", false},
      {"preset", "training preset: tbdense, matres, tcr, synthetic", false},
      {"seeds", "comma-separated seed list", false},
      {"output", "output directory", true},
      {"window", "max sentence distance of candidate pairs", false},
      {"direction", "training pairs: forward, backward, both", false},
      {"symmetry", "symmetry constraint in stage two", false},
      {"transitivity", "transitivity constraint in stage two", false},
      {"causal", "temporal-causal constraint in stage two", false},
      {"exclude", "labels left out of micro-F1", false},
      {"use_features", "concatenate pair features before the head", false},
      {"d_hid", "LSTM hidden size", false},
      {"d_in", "projected token size", false},
      {"d_pos", "POS embedding size", false},
      {"layers", "LSTM layers", false},
      {"dropout", "dropout rate", false},
      {"local_lr", "stage-one Adam learning rate", false},
      {"local_epochs", "stage-one epochs", false},
      {"batch_docs", "stage-one documents per batch", false},
      {"global_lr", "stage-two initial learning rate", false},
      {"global_decay", "stage-two learning-rate decay per epoch", false},
      {"global_epochs", "stage-two epochs", false},
      {"momentum", "stage-two momentum", false},
      {"c", "regularizer weight C", false},
      {"early_stopping", "stop stage two after `patience` epochs without gain", false},
      {"patience", "early-stopping patience", false},
      {"augmented", "loss-augmented inference in stage two", false},
      {"log_level", "trace, debug, info, warn, error, off", false},
  };
  return keys;
}

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir, const std::string& source) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  std::map<std::string, int, std::less<>> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!find_key(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError(where + "key '" + key + "' already set on line " + std::to_string(it->second));
    }
    seen.emplace(key, line_no);
    cfg.values_[key] = resolve(key, value, base_dir);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(),
               path.string());
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

bool RunConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> RunConfig::get(std::string_view key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

std::string RunConfig::get_or(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::string RunConfig::require(std::string_view key) const {
  auto v = get(key);
  if (!v || v->empty()) throw ConfigError("missing required config key '" + std::string(key) + "'");
  return *v;
}

int RunConfig::get_int(std::string_view key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  int out = 0;
  const auto* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + std::string(key) + "' expects an integer, got '" + *v + "'");
  return out;
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (v->empty() || errno != 0 || end != v->c_str() + v->size()) {
    throw ConfigError("key '" + std::string(key) + "' expects a number, got '" + *v + "'");
  }
  return out;
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + std::string(key) + "' expects true/false, got '" + *v + "'");
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  auto v = get(key);
  return v ? split_list(*v) : std::vector<std::string>{};
}

LabelScheme RunConfig::scheme() const {
  const std::string s = get_or("scheme", "dense");
  if (s == "dense") return LabelScheme::dense();
  if (s == "start_point") return LabelScheme::start_point();
  if (!std::filesystem::exists(s)) throw ConfigError("scheme file does not exist: " + s);
  return LabelScheme::load(s);
}

EmbeddingSource RunConfig::embeddings() const {
  if (auto path = get("embeddings"); path && !path->empty()) {
    if (!std::filesystem::exists(*path)) throw ConfigError("embedding sidecar does not exist: " + *path);
    return EmbeddingSource::load(*path);
  }
  if (get_bool("hashed", false)) return EmbeddingSource::hashed(get_int("hashed_dim", 16));
  throw ConfigError("no word vectors configured: set embeddings=<file> or hashed=true");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c = preset_config(get_or("preset", "synthetic"));
  c.window = get_int("window", c.window);
  if (auto d = get("direction")) c.direction = parse_direction(*d);
  c.constraints.symmetry = get_bool("symmetry", c.constraints.symmetry);
  c.constraints.transitivity = get_bool("transitivity", c.constraints.transitivity);
  c.constraints.causal = get_bool("causal", c.constraints.causal);
  if (has("exclude")) c.exclude = get_list("exclude");
  c.model.use_features = get_bool("use_features", c.model.use_features);
  c.model.d_hid = get_int("d_hid", c.model.d_hid);
  c.model.d_in = get_int("d_in", c.model.d_in);
  c.model.d_pos = get_int("d_pos", c.model.d_pos);
  c.model.layers = get_int("layers", c.model.layers);
  c.model.dropout = get_double("dropout", c.model.dropout);
  c.local_lr = get_double("local_lr", c.local_lr);
  c.local_epochs = get_int("local_epochs", c.local_epochs);
  c.batch_docs = get_int("batch_docs", c.batch_docs);
  c.global_lr = get_double("global_lr", c.global_lr);
  c.global_decay = get_double("global_decay", c.global_decay);
  c.global_epochs = get_int("global_epochs", c.global_epochs);
  c.momentum = get_double("momentum", c.momentum);
  c.c = get_double("c", c.c);
  c.early_stopping = get_bool("early_stopping", c.early_stopping);
  c.patience = get_int("patience", c.patience);
  c.augmented = get_bool("augmented", c.augmented);
  if (has("seeds")) c.seeds = parse_seeds(get_list("seeds"));
  return c;
}

void RunConfig::check_paths(const std::vector<std::string_view>& keys) const {
  for (auto key : keys) {
    auto v = get(key);
    if (!v || v->empty()) continue;
    if (key == "scheme" && is_builtin_scheme(*v)) continue;
    if (!std::filesystem::exists(*v)) {
      throw ConfigError("path for '" + std::string(key) + "' does not exist: " + *v);
    }
  }
}

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& items) {
  std::vector<std::uint64_t> out;
  for (const auto& s : items) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("invalid seed '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace tempssvm::cli
