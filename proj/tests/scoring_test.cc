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


#include "tempssvm/scoring.h"

#include <gtest/gtest.h>

#include "oracles/gradcheck.h"
#include "tempssvm/error.h"

namespace tempssvm {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.num_labels = 6;
  c.num_tags = 8;
  c.d_word = 16;
  c.d_pos = 4;
  c.d_in = 10;
  c.d_hid = 5;
  c.layers = 2;
  c.dropout = 0.0;
  return c;
}

Document tiny_doc() {
  Document d;
  d.id = "d";
  d.tokens = {"a", "storm", "hit", "the", "coast", "."};
  d.pos_tags = {5, 3, 1, 5, 3, 2};
  d.sentence_spans = {{0, 6}};
  d.events = {{"e1", 1, 1, 0}, {"e2", 2, 2, 1}, {"e3", 4, 0, 0}};
  return d;
}

TEST(ScoringTest, InitShapes) {
  const auto p = ModelParams::init(small_config());
  EXPECT_EQ(p.pos_embedding.rows(), 8);
  EXPECT_EQ(p.pos_embedding.cols(), 4);
  EXPECT_EQ(p.proj_weight.rows(), 10);
  EXPECT_EQ(p.proj_weight.cols(), 20);
  ASSERT_EQ(p.lstm.size(), 2u);
  EXPECT_EQ(p.lstm[0][0].w_input.rows(), 20);
  EXPECT_EQ(p.lstm[0][0].w_input.cols(), 10);
  EXPECT_EQ(p.lstm[1][1].w_input.cols(), 10);  // 2h from the layer below
  EXPECT_EQ(p.lstm[1][1].w_recurrent.cols(), 5);
  EXPECT_EQ(p.temporal_weight.rows(), 6);
  EXPECT_EQ(p.temporal_weight.cols(), 20);
  EXPECT_EQ(p.causal_weight.size(), 0);
  // Recurrent blocks are orthogonal.
  const Mat block = p.lstm[0][0].w_recurrent.topRows(5);
  EXPECT_LT((block.transpose() * block - Mat::Identity(5, 5)).norm(), 1e-9);
}

TEST(ScoringTest, EmbedShape) {
  const auto p = ModelParams::init(small_config());
  const Mat x = embed_tokens(tiny_doc(), EmbeddingSource::hashed(16), p);
  EXPECT_EQ(x.rows(), 6);
  EXPECT_EQ(x.cols(), 10);
}

TEST(ScoringTest, HashedWordVectorsDependOnTokenOnly) {
  Document other = tiny_doc();
  other.id = "other";
  other.tokens = {"storm", "x", "y", "z", "w", "."};
  const auto src = EmbeddingSource::hashed(16);
  EXPECT_EQ(Vec(src.word_vectors(tiny_doc()).row(1).transpose()), Vec(src.word_vectors(other).row(0).transpose()));
}

TEST(ScoringTest, SingleTokenDocument) {
  auto c = small_config();
  c.layers = 1;
  const auto p = ModelParams::init(c);
  Mat w = Mat::Random(1, 16);
  const std::vector<int> tags = {3};
  const auto enc = encode_context(w, tags, p);
  EXPECT_EQ(enc.size(), 1);
  // With one token both directions see the same single input.
  const auto enc2 = encode_context(w, tags, p);
  EXPECT_EQ(enc.forward, enc2.forward);
}

TEST(ScoringTest, ZeroRecurrenceMakesStatesLocal) {
  auto c = small_config();
  c.layers = 1;
  auto p = ModelParams::init(c);
  // The cell state also carries history, so close the forget gate too.
  for (auto& dir : p.lstm[0]) {
    dir.w_recurrent.setZero();
    dir.bias.middleCols(5, 5).setConstant(-1e3);
  }
  Mat w = Mat::Random(5, 16);
  const std::vector<int> tags = {1, 2, 3, 4, 5};
  const auto enc = encode_context(w, tags, p);
  Mat w2 = w;
  w2.row(0).setRandom();
  w2.row(4).setRandom();
  const auto enc2 = encode_context(w2, tags, p);
  for (int t = 1; t < 4; ++t) {
    EXPECT_EQ(Vec(enc.forward.row(t).transpose()), Vec(enc2.forward.row(t).transpose()));
    EXPECT_EQ(Vec(enc.backward.row(t).transpose()), Vec(enc2.backward.row(t).transpose()));
  }
  // Without zeroed weights a change at token 0 reaches token 3.
  auto q = ModelParams::init(c);
  EXPECT_NE(Vec(encode_context(w, tags, q).forward.row(3).transpose()),
            Vec(encode_context(w2, tags, q).forward.row(3).transpose()));
}

TEST(ScoringTest, PairOrderMatters) {
  const auto p = ModelParams::init(small_config());
  const Document d = tiny_doc();
  DocumentPass pass(p, EmbeddingSource::hashed(16).word_vectors(d), d.pos_tags);
  const Vec ij = score_pair(pass, d, {0, 1}, Head::kTemporal, p);
  const Vec ji = score_pair(pass, d, {1, 0}, Head::kTemporal, p);
  EXPECT_GT((ij - ji).norm(), 1e-6);
  EXPECT_NEAR(softmax(ij).sum(), 1.0, 1e-12);
  EXPECT_NEAR(log_softmax(ij).array().exp().sum(), 1.0, 1e-12);
}

TEST(ScoringTest, FeaturesOffIgnoresFeatureContent) {
  const auto p = ModelParams::init(small_config());
  const Document d = tiny_doc();
  DocumentPass pass(p, EmbeddingSource::hashed(16).word_vectors(d), d.pos_tags);
  const PairFeatures a{0, 0, 0, 0, 0}, b{7, 3, 2, 1, 1};
  const Vec sa = pass.score(1, 2, Head::kTemporal, &a);
  const Vec sb = pass.score(1, 2, Head::kTemporal, &b);
  const Vec none = pass.score(1, 2, Head::kTemporal, nullptr);
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa, none);

  auto c = small_config();
  c.use_features = true;
  const auto pf = ModelParams::init(c);
  EXPECT_EQ(pf.temporal_weight.cols(), 20 + c.feature_dim());
  DocumentPass passf(pf, EmbeddingSource::hashed(16).word_vectors(d), d.pos_tags);
  EXPECT_NE(passf.score(1, 2, Head::kTemporal, &a), passf.score(1, 2, Head::kTemporal, &b));
}

TEST(ScoringTest, FeatureEncoding) {
  const Document d = tiny_doc();
  const PairFeatures f = pair_features(d, {0, 2});
  EXPECT_EQ(f.token_distance, 3);
  EXPECT_EQ(f.tense_i, 1);
  EXPECT_EQ(f.tense_j, 0);
  const Vec v = encode_features(f);
  ModelConfig c;
  EXPECT_EQ(v.size(), c.feature_dim());
  EXPECT_EQ(v.sum(), 5.0);  // five one-hot groups
  EXPECT_EQ(v[3], 1.0);     // distance bucket 3
  PairFeatures far = f;
  far.token_distance = 40;
  EXPECT_EQ(encode_features(far)[kDistanceBuckets - 1], 1.0);
}

TEST(ScoringTest, ScoreInstanceMatchesScorePair) {
  const auto p = ModelParams::init(small_config());
  auto doc = std::make_shared<const Document>(tiny_doc());
  const auto inst = make_instance(doc);
  const auto emb = EmbeddingSource::hashed(16);
  const ScoreTable t = score_instance(inst, p, emb);
  ASSERT_EQ(t.num_pairs(), 3);
  DocumentPass pass(p, emb.word_vectors(*doc), doc->pos_tags);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(Vec(t.scores.row(k).transpose()), score_pair(pass, *doc, inst.pairs[static_cast<std::size_t>(k)], Head::kTemporal, p));
  }
  EXPECT_EQ(score_instance(inst, p, emb).scores, t.scores);
}

TEST(ScoringTest, DropoutOnlyWithRng) {
  auto c = small_config();
  c.dropout = 0.5;
  const auto p = ModelParams::init(c);
  const Document d = tiny_doc();
  const Mat w = EmbeddingSource::hashed(16).word_vectors(d);
  DocumentPass eval1(p, w, d.pos_tags), eval2(p, w, d.pos_tags);
  EXPECT_EQ(eval1.encoded().forward, eval2.encoded().forward);
  Rng r1(5), r2(5), r3(6);
  DocumentPass t1(p, w, d.pos_tags, &r1), t2(p, w, d.pos_tags, &r2), t3(p, w, d.pos_tags, &r3);
  EXPECT_EQ(t1.score(1, 2, Head::kTemporal), t2.score(1, 2, Head::kTemporal));
  EXPECT_NE(t1.score(1, 2, Head::kTemporal), t3.score(1, 2, Head::kTemporal));
  EXPECT_NE(t1.score(1, 2, Head::kTemporal), eval1.score(1, 2, Head::kTemporal));
}

TEST(ScoringTest, WordVectorsAreNotParameters) {
  const auto p = ModelParams::init(small_config());
  for (const auto& name : p.tensor_names()) EXPECT_EQ(name.find("word"), std::string::npos) << name;
}

TEST(ScoringTest, PosGradientOnlyOnUsedTags) {
  const auto p = ModelParams::init(small_config());
  const Document d = tiny_doc();  // tags 1, 2, 3, 5
  DocumentPass pass(p, EmbeddingSource::hashed(16).word_vectors(d), d.pos_tags);
  ModelParams g = ModelParams::zeros_like(p);
  Vec ds = Vec::LinSpaced(6, -1.0, 1.0);
  pass.backprop_score(1, 4, Head::kTemporal, nullptr, ds, g);
  pass.backward(g);
  for (int tag = 0; tag < 8; ++tag) {
    const double n = g.pos_embedding.row(tag).norm();
    if (tag == 1 || tag == 2 || tag == 3 || tag == 5) {
      EXPECT_GT(n, 0.0) << tag;
    } else {
      EXPECT_EQ(n, 0.0) << tag;
    }
  }
  // The gradient reaches the word vectors but nothing stores it.
  EXPECT_GT(pass.word_vector_grad().norm(), 0.0);
}

TEST(ScoringTest, ConfigValidation) {
  auto c = small_config();
  c.d_hid = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

// Scalar loss: fixed random weights on the score vectors of every ordered
// pair, temporal and (when present) causal.
TEST(ScoringGradientTest, EncoderAndHeadsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const bool causal = seed % 2 == 0;
    auto c = gradcheck::random_case(seed, 6, causal);
    const Document& doc = *c.doc;
    Rng wrng(seed * 31);
    std::vector<std::pair<EventPair, Vec>> terms;
    for (int i = 0; i < doc.num_events(); ++i) {
      for (int j = 0; j < doc.num_events(); ++j) {
        if (i != j) terms.push_back({{i, j}, Vec::NullaryExpr(6, [&] { return wrng.uniform(-1, 1); })});
      }
    }
    auto run = [&](const ModelParams& p, ModelParams* grads) {
      Rng drop(99);
      DocumentPass pass(p, c.words, doc.pos_tags, c.dropout ? &drop : nullptr);
      double total = 0.0;
      for (const auto& [pair, w] : terms) {
        const PairFeatures f = pair_features(doc, pair);
        const int ti = doc.events[static_cast<std::size_t>(pair.first)].token;
        const int tj = doc.events[static_cast<std::size_t>(pair.second)].token;
        total += w.dot(pass.score(ti, tj, Head::kTemporal, &f));
        if (grads) pass.backprop_score(ti, tj, Head::kTemporal, &f, w, *grads);
        if (causal) {
          const Vec wc = w.head(3);
          total += wc.dot(pass.score(ti, tj, Head::kCausal, &f));
          if (grads) pass.backprop_score(ti, tj, Head::kCausal, &f, wc, *grads);
        }
      }
      if (grads) pass.backward(*grads);
      return total;
    };
    ModelParams g = ModelParams::zeros_like(c.params);
    run(c.params, &g);
    const auto worst = gradcheck::compare(c.params, g, [&](const ModelParams& p) { return run(p, nullptr); });
    EXPECT_LT(worst.rel_error, 1e-4) << "seed " << seed << " tensor " << worst.tensor;
  }
}

}  // namespace
}  // namespace tempssvm
