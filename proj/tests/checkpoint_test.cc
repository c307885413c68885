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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "tempssvm/error.h"

namespace tempssvm {
namespace {

ModelParams sample(bool causal) {
  ModelConfig c;
  c.scheme = causal ? "start_point" : "dense";
  c.num_labels = causal ? 4 : 6;
  c.d_hid = 6;
  c.d_in = 7;
  c.layers = 2;
  c.use_features = true;
  c.causal_head = causal;
  c.seed = 42;
  return ModelParams::init(c);
}

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tempssvm_ckpt_" + name);
}

void expect_bitwise_equal(const ModelParams& a, const ModelParams& b) {
  const auto ta = a.tensors(), tb = b.tensors();
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t k = 0; k < ta.size(); ++k) {
    ASSERT_EQ(ta[k]->rows(), tb[k]->rows());
    ASSERT_EQ(ta[k]->cols(), tb[k]->cols());
    EXPECT_EQ(std::memcmp(ta[k]->data(), tb[k]->data(), sizeof(double) * static_cast<std::size_t>(ta[k]->size())), 0);
  }
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  for (bool causal : {false, true}) {
    const auto p = sample(causal);
    const auto path = tmp(causal ? "c.ckpt" : "d.ckpt");
    save_checkpoint(path, p, R"({"stage":"local"})");
    const auto back = load_checkpoint(path);
    expect_bitwise_equal(p, back.params);
    EXPECT_EQ(back.params.config.d_hid, 6);
    EXPECT_EQ(back.params.config.causal_head, causal);
    EXPECT_EQ(back.params.config.scheme, p.config.scheme);
    EXPECT_NE(back.run_info.find("local"), std::string::npos);
    std::filesystem::remove(path);
  }
}

TEST(CheckpointTest, TruncatedFileFailsChecksum) {
  const std::string bytes = serialize_checkpoint(sample(false));
  for (std::size_t cut : {bytes.size() - 1, bytes.size() - 9, bytes.size() / 2}) {
    try {
      deserialize_checkpoint(bytes.substr(0, cut));
      FAIL() << "expected CheckpointError at " << cut;
    } catch (const CheckpointError& e) {
      EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
    }
  }
}

TEST(CheckpointTest, CorruptedByteFailsChecksum) {
  std::string bytes = serialize_checkpoint(sample(false));
  bytes[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint(bytes), CheckpointError);
}

TEST(CheckpointTest, BadMagic) {
  std::string bytes = serialize_checkpoint(sample(false));
  bytes[0] = 'X';
  try {
    deserialize_checkpoint(bytes);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("not a tempssvm checkpoint"), std::string::npos) << e.what();
  }
}

TEST(CheckpointTest, UnsupportedVersion) {
  std::string bytes = serialize_checkpoint(sample(false));
  bytes[8] = 7;  // first byte of the little-endian version field
  try {
    deserialize_checkpoint(bytes);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version 7 is not supported"), std::string::npos) << e.what();
  }
}

TEST(CheckpointTest, SchemeMismatch) {
  const auto path = tmp("scheme.ckpt");
  save_checkpoint(path, sample(false));
  EXPECT_NO_THROW(load_checkpoint(path, LabelScheme::dense()));
  EXPECT_THROW(load_checkpoint(path, LabelScheme::start_point()), CheckpointError);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, MissingFile) { EXPECT_THROW(load_checkpoint(tmp("absent.ckpt")), CheckpointError); }

TEST(CheckpointTest, SerializationIsDeterministic) {
  EXPECT_EQ(serialize_checkpoint(sample(true)), serialize_checkpoint(sample(true)));
}

TEST(CheckpointTest, ConfigJsonRoundTrip) {
  ModelConfig c = sample(true).config;
  c.dropout = 0.25;
  const ModelConfig back = model_config_from_json(model_config_to_json(c));
  EXPECT_EQ(back.scheme, c.scheme);
  EXPECT_EQ(back.dropout, 0.25);
  EXPECT_EQ(back.layers, 2);
  EXPECT_EQ(back.use_features, true);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_THROW(model_config_from_json("{not json"), Error);
}

}  // namespace
}  // namespace tempssvm
