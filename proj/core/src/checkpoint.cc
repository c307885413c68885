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

#include "tempssvm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tempssvm/error.h"
#include "tempssvm/rng.h"

namespace tempssvm {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'S', 'V', 'M', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t limit, const std::string& source)
      : bytes_(bytes), limit_(limit), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > limit_) throw CheckpointError(source_ + ": checkpoint body ends early");
  }

  const std::string& bytes_;
  std::size_t limit_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::json j = {{"scheme", c.scheme},   {"num_labels", c.num_labels},     {"num_tags", c.num_tags},
                      {"d_word", c.d_word},   {"d_pos", c.d_pos},               {"d_in", c.d_in},
                      {"d_hid", c.d_hid},     {"layers", c.layers},             {"dropout", c.dropout},
                      {"use_features", c.use_features}, {"causal_head", c.causal_head}, {"seed", c.seed}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.scheme = j.at("scheme").get<std::string>();
    c.num_labels = j.at("num_labels").get<int>();
    c.num_tags = j.at("num_tags").get<int>();
    c.d_word = j.at("d_word").get<int>();
    c.d_pos = j.at("d_pos").get<int>();
    c.d_in = j.at("d_in").get<int>();
    c.d_hid = j.at("d_hid").get<int>();
    c.layers = j.at("layers").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.use_features = j.at("use_features").get<bool>();
    c.causal_head = j.at("causal_head").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad model configuration record: ") + e.what());
  }
}

std::string serialize_checkpoint(const ModelParams& params, const std::string& run_info) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  nlohmann::json config = nlohmann::json::parse(model_config_to_json(params.config));
  config["run"] = nlohmann::json::parse(run_info);
  put_string(out, config.dump());
  put_string(out, params.config.scheme);
  const auto names = params.tensor_names();
  const auto tensors = params.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    put_string(out, names[t]);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(tensors[t]->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(tensors[t]->cols()));
    out.append(reinterpret_cast<const char*>(tensors[t]->data()),
               static_cast<std::size_t>(tensors[t]->size()) * sizeof(double));
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(source + ": not a tempssvm checkpoint");
  }
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t)) {
    throw CheckpointError(source + ": checksum mismatch (file truncated)");
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion) {
    throw CheckpointError(source + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw CheckpointError(source + ": checksum mismatch (file truncated)");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (fnv1a64(std::string_view(bytes.data(), body)) != stored) {
    throw CheckpointError(source + ": checksum mismatch (file truncated or corrupted)");
  }

  Reader in(bytes, body, source);
  in.get<std::uint64_t>();  // magic
  in.get<std::uint32_t>();  // version
  nlohmann::json config = nlohmann::json::parse(in.get_string());
  Checkpoint ckp;
  ckp.run_info = config.contains("run") ? config["run"].dump() : "{}";
  config.erase("run");
  ckp.params = ModelParams::init(model_config_from_json(config.dump()));
  const std::string scheme = in.get_string();
  if (scheme != ckp.params.config.scheme) throw CheckpointError(source + ": scheme name disagrees with config");

  auto tensors = ckp.params.tensors();
  const auto names = ckp.params.tensor_names();
  const auto count = in.get<std::uint32_t>();
  if (count != tensors.size()) {
    throw CheckpointError(source + ": expected " + std::to_string(tensors.size()) + " tensors, found " +
                          std::to_string(count));
  }
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const std::string name = in.get_string();
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (name != names[t] || rows != static_cast<std::uint64_t>(tensors[t]->rows()) ||
        cols != static_cast<std::uint64_t>(tensors[t]->cols())) {
      throw CheckpointError(source + ": tensor '" + name + "' does not match the recorded configuration");
    }
    in.read_doubles(tensors[t]->data(), static_cast<std::size_t>(rows * cols));
  }
  if (in.pos() != body) throw CheckpointError(source + ": trailing bytes after tensors");
  return ckp;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const std::string& run_info) {
  const std::string bytes = serialize_checkpoint(params, run_info);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("error writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const LabelScheme& scheme) {
  Checkpoint ckp = load_checkpoint(path);
  if (ckp.params.config.scheme != scheme.name() || ckp.params.config.num_labels != scheme.size()) {
    throw CheckpointError(path.string() + ": checkpoint was trained under scheme '" + ckp.params.config.scheme +
                          "', not '" + scheme.name() + "'");
  }
  return ckp;
}

}  // namespace tempssvm
