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


#include "tempssvm/learning.h"

#include <gtest/gtest.h>

#include <atomic>
#include <cstring>

#include "oracles/gradcheck.h"
#include "tempssvm/error.h"

namespace tempssvm {
namespace {

Assignment with_labels(const Instance& inst, const std::vector<int>& labels) {
  Assignment a = inst.gold_assignment();
  for (std::size_t k = 0; k < labels.size(); ++k) a.labels[k] = Label{labels[k]};
  return a;
}

// A ŷ that differs from gold on every temporal pair.
Assignment shifted(const Instance& inst, int num_labels) {
  Assignment a = inst.gold_assignment();
  for (auto& l : a.labels) l = Label{(l.index + 1) % num_labels};
  return a;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  const auto ta = a.tensors(), tb = b.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (std::memcmp(ta[k]->data(), tb[k]->data(), sizeof(double) * static_cast<std::size_t>(ta[k]->size())) != 0) {
      return false;
    }
  }
  return true;
}

TEST(HammingTest, Basics) {
  const auto c = gradcheck::random_case(3, 6, false);
  const Assignment g = c.instance.gold_assignment();
  EXPECT_EQ(hamming(g, g), 0);
  const Assignment all = shifted(c.instance, 6);
  EXPECT_EQ(hamming(g, all), static_cast<int>(g.labels.size()));
  EXPECT_EQ(hamming(all, g), hamming(g, all));
  Assignment other = g;
  other.pairs.pop_back();
  other.labels.pop_back();
  EXPECT_THROW(hamming(g, other), DataError);
}

TEST(HingeTest, GoldPredictionHasZeroLoss) {
  const auto s = LabelScheme::dense();
  const auto c = gradcheck::random_case(5, 6, false);
  const auto cs = ConstraintSet::build(c.instance.pairs, {}, s, {false, false, false});
  const Assignment g = c.instance.gold_assignment();
  const auto r = hinge_loss(c.instance, c.words, c.params, s, cs, true, nullptr, nullptr, &g);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.hamming, 0);
}

TEST(HingeTest, MatchesRederivationFromScoreTable) {
  const auto s = LabelScheme::dense();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = gradcheck::random_case(seed, 6, false);
    const auto cs = ConstraintSet::build(c.instance.pairs, {}, s, {false, false, false});
    Rng rng(seed);
    std::vector<int> labels;
    for (std::size_t k = 0; k < c.instance.pairs.size(); ++k) labels.push_back(rng.between(0, 5));
    const Assignment yhat = with_labels(c.instance, labels);
    const auto r = hinge_loss(c.instance, c.words, c.params, s, cs, true, nullptr, nullptr, &yhat);

    DocumentPass pass(c.params, c.words, c.doc->pos_tags);
    const ScoreTable t = score_instance(c.instance, pass, c.params);
    double gap = 0.0;
    int delta = 0;
    for (int k = 0; k < t.num_pairs(); ++k) {
      const int g = c.instance.gold[static_cast<std::size_t>(k)].index;
      gap += t.scores(k, labels[static_cast<std::size_t>(k)]) - t.scores(k, g);
      delta += labels[static_cast<std::size_t>(k)] != g;
    }
    const double expected = std::max(0.0, delta + gap) / c.instance.size();
    EXPECT_NEAR(r.loss, expected, 1e-12) << seed;
    EXPECT_GE(r.loss, 0.0);
    EXPECT_NEAR(ssvm_instance_loss(t, c.instance.gold_assignment(), yhat, c.instance.size()), expected, 1e-12);

    // Unpinned: ŷ is the loss-augmented optimum, so the loss is at least the
    // pinned loss of any feasible structure.
    const auto best = hinge_loss(c.instance, c.words, c.params, s, cs, true, nullptr, nullptr);
    EXPECT_GE(best.loss + 1e-12, r.loss) << seed;
  }
}

TEST(GradientTest, LocalLossMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const bool causal = seed % 3 == 0;
    auto c = gradcheck::random_case(100 + seed, causal ? 4 : 6, causal);
    ModelParams g = ModelParams::zeros_like(c.params);
    Rng r0(seed);
    local_loss(c.instance, c.words, c.params, c.dropout ? &r0 : nullptr, &g, 0.7);
    const auto worst = gradcheck::compare(c.params, g, [&](const ModelParams& p) {
      Rng r(seed);
      return local_loss(c.instance, c.words, p, c.dropout ? &r : nullptr, nullptr, 0.7);
    });
    EXPECT_LT(worst.rel_error, 1e-4) << "seed " << seed << " tensor " << worst.tensor;
  }
}

TEST(GradientTest, PinnedHingeMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const bool causal = seed % 3 == 0;
    const auto s = causal ? LabelScheme::start_point() : LabelScheme::dense();
    auto c = gradcheck::random_case(200 + seed, s.size(), causal);
    const auto cs = ConstraintSet::build(c.instance.pairs, c.instance.causal_pairs, s, {false, false, false});
    Assignment yhat = shifted(c.instance, s.size());
    for (auto& v : yhat.causal) v = static_cast<CausalLabel>((static_cast<int>(v) + 1) % 3);
    ModelParams g = ModelParams::zeros_like(c.params);
    Rng r0(seed);
    const auto base = hinge_loss(c.instance, c.words, c.params, s, cs, true, c.dropout ? &r0 : nullptr, &g, &yhat);
    ASSERT_GT(base.hamming + base.score_gap, 0.1) << "hinge must be active away from the kink";
    const auto worst = gradcheck::compare(c.params, g, [&](const ModelParams& p) {
      Rng r(seed);
      return hinge_loss(c.instance, c.words, p, s, cs, true, c.dropout ? &r : nullptr, nullptr, &yhat).loss;
    });
    EXPECT_LT(worst.rel_error, 1e-4) << "seed " << seed << " tensor " << worst.tensor;
  }
}

TEST(GradientTest, SingleStepReducesScoreGap) {
  const auto s = LabelScheme::dense();
  int active = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = gradcheck::random_case(300 + seed, 6, false);
    const auto cs = ConstraintSet::build(c.instance.pairs, {}, s, {false, false, false});
    const Assignment yhat = shifted(c.instance, 6);
    ModelParams g = ModelParams::zeros_like(c.params);
    const auto before = hinge_loss(c.instance, c.words, c.params, s, cs, true, nullptr, &g, &yhat);
    if (before.loss == 0.0) continue;  // no subgradient
    ++active;
    ModelParams stepped = c.params;
    stepped.add_scaled(g, -1e-3);
    const auto after = hinge_loss(c.instance, c.words, stepped, s, cs, true, nullptr, nullptr, &yhat);
    EXPECT_LT(after.score_gap, before.score_gap) << seed;
  }
  EXPECT_GE(active, 5);
}

SyntheticCorpus corpus(std::uint64_t seed, int docs, double noise) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.docs = docs;
  cfg.noise = noise;
  return synthesize_corpus(cfg, LabelScheme::dense());
}

TEST(TrainingTest, NoiseFreeCorpusIsLearnedLocally) {
  const auto s = LabelScheme::dense();
  const auto emb = EmbeddingSource::hashed(16);
  const Dataset train = make_dataset(corpus(1, 100, 0.0).documents, emb);
  TrainConfig cfg = preset_config("synthetic");
  const auto r = train_local(train, train, s, cfg, 1);
  DecodeOptions local;
  local.global = false;
  const auto d = decode_dataset(train, r.params, s, local);
  const Prf acc = micro_average(d.predicted, d.gold);
  EXPECT_GE(acc.f1, 0.99);
}

class TrainedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scheme_ = new LabelScheme(LabelScheme::dense());
    const auto emb = EmbeddingSource::hashed(16);
    train_ = new Dataset(make_dataset(corpus(2, 30, 0.3).documents, emb));
    dev_ = new Dataset(make_dataset(corpus(3, 15, 0.3).documents, emb));
    cfg_ = new TrainConfig(preset_config("synthetic"));
    cfg_->local_epochs = 6;
    cfg_->global_epochs = 2;
    local_ = new ModelParams(train_local(*train_, *dev_, *scheme_, *cfg_, 7).params);
  }
  static void TearDownTestSuite() {
    delete scheme_;
    delete train_;
    delete dev_;
    delete cfg_;
    delete local_;
  }
  static LabelScheme* scheme_;
  static Dataset* train_;
  static Dataset* dev_;
  static TrainConfig* cfg_;
  static ModelParams* local_;
};

LabelScheme* TrainedModel::scheme_ = nullptr;
Dataset* TrainedModel::train_ = nullptr;
Dataset* TrainedModel::dev_ = nullptr;
TrainConfig* TrainedModel::cfg_ = nullptr;
ModelParams* TrainedModel::local_ = nullptr;

TEST_F(TrainedModel, SymmetricDecodingGivesEqualForwardAndBothWayScores) {
  DecodeOptions fwd;
  DecodeOptions both = fwd;
  both.direction = Direction::kBoth;
  const auto a = decode_dataset(*dev_, *local_, *scheme_, fwd);
  const auto b = decode_dataset(*dev_, *local_, *scheme_, both);
  EXPECT_EQ(micro_average(a.predicted, a.gold).f1, micro_average(b.predicted, b.gold).f1);
  EXPECT_EQ(a.violations, 0);
  EXPECT_EQ(b.violations, 0);
  // Shared forward pairs carry identical labels.
  for (std::size_t d = 0; d < a.predicted.size(); ++d) {
    for (std::size_t k = 0; k < a.predicted[d].labels.size(); ++k) {
      EXPECT_EQ(a.predicted[d].labels[k], b.predicted[d].labels[k]);
    }
  }
}

TEST_F(TrainedModel, LocalDecodingViolatesConstraints) {
  DecodeOptions local;
  local.global = false;
  const auto d = decode_dataset(*dev_, *local_, *scheme_, local);
  EXPECT_GT(d.docs_with_violations, 0);
}

TEST_F(TrainedModel, StageTwoIsDeterministicAcrossJobs) {
  TrainConfig one = *cfg_, two = *cfg_;
  one.jobs = 1;
  two.jobs = 3;
  const auto a = train_global(*train_, *dev_, *scheme_, one, *local_, 11);
  const auto b = train_global(*train_, *dev_, *scheme_, two, *local_, 11);
  EXPECT_TRUE(same_params(a.params, b.params));
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].to_json(), b.history[e].to_json());
}

TEST_F(TrainedModel, ZeroLearningRateIsANoOp) {
  TrainConfig c = *cfg_;
  c.global_lr = 0.0;
  c.c = 0.0;
  c.global_epochs = 1;
  const auto r = train_global(*train_, *dev_, *scheme_, c, *local_, 1);
  EXPECT_TRUE(same_params(r.params, *local_));
  DecodeOptions global;
  const auto start = decode_dataset(*dev_, *local_, *scheme_, global);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].dev.f1, micro_average(start.predicted, start.gold).f1);
}

TEST_F(TrainedModel, SingleInstanceHingeGoesToZero) {
  Dataset one;
  one.docs = {train_->docs[0]};
  one.forward = {train_->forward[0]};
  one.words = {train_->words[0]};
  TrainConfig c = *cfg_;
  c.c = 0.0;
  c.global_lr = 0.05;
  c.global_decay = 1.0;
  c.global_epochs = 60;
  c.early_stopping = false;
  c.model.dropout = 0.0;
  ModelParams start = *local_;
  start.config.dropout = 0.0;
  const auto r = train_global(one, one, *scheme_, c, start, 1);
  ASSERT_FALSE(r.history.empty());
  EXPECT_EQ(r.history.back().train_loss, 0.0);
}

TEST(TrainConfigTest, PresetsAndValidation) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(preset_config(name).validate()) << name;
  EXPECT_EQ(preset_config("tbdense").model.d_hid, 60);
  EXPECT_EQ(preset_config("matres").exclude, std::vector<std::string>{"VAGUE"});
  EXPECT_TRUE(preset_config("tcr").constraints.causal);
  EXPECT_THROW(preset_config("timebank"), ConfigError);
  TrainConfig c = preset_config("tbdense");
  c.global_decay = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = preset_config("tbdense");
  c.local_lr = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

}  // namespace
}  // namespace tempssvm
