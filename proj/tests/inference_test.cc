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


#include "tempssvm/inference.h"

#include <gtest/gtest.h>

#include <set>

#include "oracles/oracles.h"
#include "tempssvm/error.h"
#include "tempssvm/rng.h"

namespace tempssvm {
namespace {

// Events: overruled (0), filed (1), claiming (2).
ScoreTable figure_one(const LabelScheme& s) {
  ScoreTable t;
  t.doc_id = "fig1";
  t.pairs = {{0, 1}, {1, 2}, {0, 2}};
  t.scores = Mat::Zero(3, s.size());
  t.scores(0, s.label("BEFORE").index) = 2.0;
  t.scores(1, s.label("SIMULTANEOUS").index) = 2.0;
  t.scores(2, s.label("AFTER").index) = 1.0;
  t.scores(2, s.label("BEFORE").index) = 0.8;
  return t;
}

std::vector<std::string> names(const LabelScheme& s, const Assignment& a) {
  std::vector<std::string> out;
  for (Label l : a.labels) out.push_back(s.label_name(l));
  return out;
}

TEST(InferenceTest, FigureOneGlobalFlipsTheOutlier) {
  const auto s = LabelScheme::dense();
  const auto t = figure_one(s);
  const auto local = local_decode(t);
  EXPECT_EQ(names(s, local), (std::vector<std::string>{"BEFORE", "SIMULTANEOUS", "AFTER"}));
  const auto global = map_inference(t, s, {});
  EXPECT_EQ(names(s, global), (std::vector<std::string>{"BEFORE", "SIMULTANEOUS", "BEFORE"}));
  EXPECT_DOUBLE_EQ(global.objective, 4.8);
  const auto oracle = brute_force_oracle(t, s, {});
  EXPECT_EQ(oracle.labels, global.labels);
  EXPECT_EQ(oracle.objective, global.objective);
}

TEST(InferenceTest, FigureOneViolations) {
  const auto s = LabelScheme::dense();
  const auto t = figure_one(s);
  const auto v = validate_graph(local_decode(t), s, {});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::kTransitivity);
  std::set<int> events;
  for (const auto& p : v[0].pairs) {
    events.insert(p.first);
    events.insert(p.second);
  }
  EXPECT_EQ(events, (std::set<int>{0, 1, 2}));
  EXPECT_TRUE(validate_graph(map_inference(t, s, {}), s, {}).empty());
}

TEST(InferenceTest, NoConstraintsEqualsArgmax) {
  const auto s = LabelScheme::dense();
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ScoreTable t;
    t.pairs = {{0, 1}, {1, 2}, {0, 2}, {1, 0}};
    t.scores = Mat::NullaryExpr(4, 6, [&] { return rng.uniform(-1, 1); });
    const auto a = map_inference(t, s, {false, false, false});
    EXPECT_EQ(a.labels, local_decode(t).labels);
  }
}

TEST(InferenceTest, SinglePair) {
  const auto s = LabelScheme::dense();
  ScoreTable t;
  t.pairs = {{0, 1}};
  t.scores = Mat::Zero(1, 6);
  t.scores(0, 0) = 3;
  t.scores(0, 1) = 1;
  const auto a = brute_force_oracle(t, s, {});
  EXPECT_EQ(a.labels[0].index, 0);
  EXPECT_EQ(a.objective, 3.0);
}

TEST(InferenceTest, SymmetryPicksJointOptimum) {
  const auto s = LabelScheme::dense();
  ScoreTable t;
  t.pairs = {{0, 1}, {1, 0}};
  t.scores = Mat::Zero(2, 6);
  t.scores(0, s.label("BEFORE").index) = 1.0;  // (0,1) BEFORE
  t.scores(1, s.label("BEFORE").index) = 1.5;  // (1,0) BEFORE, i.e. (0,1) AFTER
  t.scores(1, s.label("AFTER").index) = 0.2;
  const auto a = map_inference(t, s, {});
  EXPECT_EQ(names(s, a), (std::vector<std::string>{"AFTER", "BEFORE"}));
  EXPECT_DOUBLE_EQ(a.objective, 1.5);
  EXPECT_EQ(brute_force_oracle(t, s, {}).labels, a.labels);
}

oracle::MapProblem to_problem(const ScoreTable& t, const LabelScheme& s, ConstraintFlags f) {
  oracle::MapProblem p;
  for (const auto& e : t.pairs) p.pairs.emplace_back(e.first, e.second);
  for (int k = 0; k < t.num_pairs(); ++k) {
    p.scores.emplace_back(t.scores.row(k).data(), t.scores.row(k).data() + t.scores.cols());
  }
  for (const auto& e : t.causal_pairs) p.causal_pairs.emplace_back(e.first, e.second);
  for (int k = 0; k < t.num_causal(); ++k) {
    p.causal_scores.emplace_back(t.causal_scores.row(k).data(), t.causal_scores.row(k).data() + 3);
  }
  const bool dense = s.size() == 6;
  for (int r = 0; r < s.size(); ++r) {
    // Reverse written out by hand: swap BEFORE/AFTER and INCLUDES/IS_INCLUDED.
    static const int kDenseRev[] = {1, 0, 3, 2, 4, 5};
    static const int kStartRev[] = {1, 0, 2, 3};
    p.reverse.push_back(dense ? kDenseRev[r] : kStartRev[r]);
  }
  p.table = oracle::composition(dense);
  p.symmetry = f.symmetry;
  p.transitivity = f.transitivity;
  p.causal = f.causal;
  p.anchor = 0;
  return p;
}

// Random instance on at most 4 events with at most `max_pairs` ordered
// candidate pairs, drawn without replacement.
ScoreTable random_table(Rng& rng, int labels, int max_pairs, int causal_pairs = 0) {
  std::vector<EventPair> all;
  const int n = rng.between(3, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) all.push_back({i, j});
    }
  }
  rng.shuffle(all);
  ScoreTable t;
  const int m = rng.between(2, max_pairs);
  t.pairs.assign(all.begin(), all.begin() + m);
  t.scores = Mat::NullaryExpr(m, labels, [&] { return rng.uniform(-1, 1); });
  const int mc = std::min(m, causal_pairs);
  t.causal_pairs.assign(t.pairs.begin(), t.pairs.begin() + mc);
  t.causal_scores = Mat::NullaryExpr(mc, 3, [&] { return rng.uniform(-1, 1); });
  return t;
}

void expect_same(const Assignment& a, const oracle::MapSolution& o, const std::string& where) {
  EXPECT_EQ(a.objective, o.objective) << where;
  std::vector<int> labels;
  for (Label l : a.labels) labels.push_back(l.index);
  EXPECT_EQ(labels, o.labels) << where;
  std::vector<int> causal;
  for (CausalLabel c : a.causal) causal.push_back(static_cast<int>(c));
  EXPECT_EQ(causal, o.causal) << where;
}

TEST(InferencePropertyTest, MatchesBothOraclesOn200Seeds) {
  const auto s = LabelScheme::dense();
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const ScoreTable t = random_table(rng, 6, 6);
    const ConstraintFlags f{rng.bernoulli(0.8), rng.bernoulli(0.8), false};
    const auto got = map_inference(t, s, f);
    const auto lib = brute_force_oracle(t, s, f);
    const std::string where = "seed " + std::to_string(seed);
    EXPECT_EQ(got.labels, lib.labels) << where;
    EXPECT_EQ(got.objective, lib.objective) << where;
    expect_same(got, oracle::solve(to_problem(t, s, f)), where);
    EXPECT_TRUE(validate_graph(got, s, f).empty()) << where;
    // Adding constraints never raises the optimum.
    EXPECT_LE(got.objective, local_decode(t).objective + 1e-12) << where;
  }
}

TEST(InferencePropertyTest, CausalCouplingMatchesOracle) {
  const auto s = LabelScheme::start_point();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed + 1000);
    const ScoreTable t = random_table(rng, 4, 5, 3);
    const ConstraintFlags f{true, true, true};
    const auto got = map_inference(t, s, f);
    const std::string where = "seed " + std::to_string(seed);
    expect_same(got, oracle::solve(to_problem(t, s, f)), where);
    const auto lib = brute_force_oracle(t, s, f);
    EXPECT_EQ(got.labels, lib.labels) << where;
    EXPECT_EQ(got.causal, lib.causal) << where;
    EXPECT_TRUE(validate_graph(got, s, f).empty()) << where;
  }
}

TEST(InferencePropertyTest, LossAugmentedMatchesOracle) {
  const auto s = LabelScheme::dense();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed + 5000);
    const ScoreTable t = random_table(rng, 6, 6);
    Assignment gold;
    gold.pairs = t.pairs;
    for (int k = 0; k < t.num_pairs(); ++k) gold.labels.push_back(Label{rng.between(0, 5)});
    const ConstraintFlags f{};
    const auto cs = ConstraintSet::build(t.pairs, {}, s, f);
    const auto got = loss_augmented_inference(t, gold, cs);
    ScoreTable aug = t;
    for (int k = 0; k < t.num_pairs(); ++k) {
      for (int r = 0; r < 6; ++r) aug.scores(k, r) += r == gold.labels[static_cast<std::size_t>(k)].index ? 0.0 : 1.0;
    }
    const std::string where = "seed " + std::to_string(seed);
    expect_same(got, oracle::solve(to_problem(aug, s, f)), where);
    EXPECT_GE(got.objective, map_inference(t, cs).objective) << where;
    EXPECT_EQ(loss_augment(t, gold).scores, aug.scores);
  }
}

TEST(InferenceTest, MarginOnlyObjective) {
  const auto s = LabelScheme::dense();
  ScoreTable t;
  t.pairs = {{0, 1}, {1, 2}, {0, 2}};
  t.scores = Mat::Zero(3, 6);
  Assignment gold;
  gold.pairs = t.pairs;
  gold.labels = {s.label("BEFORE"), s.label("BEFORE"), s.label("BEFORE")};
  const auto cs = ConstraintSet::build(t.pairs, {}, s, {});
  const auto a = loss_augmented_inference(t, gold, cs);
  EXPECT_EQ(a.objective, 3.0);
  EXPECT_TRUE(validate_graph(a, s, {}).empty());
}

TEST(InferenceTest, DominantGoldIsReturned) {
  const auto s = LabelScheme::dense();
  auto t = figure_one(s);
  Assignment gold;
  gold.pairs = t.pairs;
  gold.labels = {s.label("BEFORE"), s.label("SIMULTANEOUS"), s.label("BEFORE")};
  for (int k = 0; k < 3; ++k) t.scores(k, gold.labels[static_cast<std::size_t>(k)].index) += 5.0;
  const auto a = loss_augmented_inference(t, gold, ConstraintSet::build(t.pairs, {}, s, {}));
  EXPECT_EQ(a.labels, gold.labels);
}

TEST(InferenceTest, CausalFlipOrDrop) {
  const auto s = LabelScheme::start_point();
  ScoreTable t;
  t.pairs = {{0, 1}};
  t.scores = Mat::Zero(1, 4);
  t.scores(0, s.label("AFTER").index) = 0.3;
  t.scores(0, s.label("BEFORE").index) = 0.1;
  t.causal_pairs = {{0, 1}};
  t.causal_scores = Mat::Zero(1, 3);
  t.causal_scores(0, 1) = 2.0;  // CAUSES
  auto a = map_inference(t, s, {true, true, true});
  EXPECT_EQ(s.label_name(a.labels[0]), "BEFORE");
  EXPECT_EQ(a.causal[0], CausalLabel::kCauses);
  t.causal_scores(0, 1) = 0.1;
  a = map_inference(t, s, {true, true, true});
  EXPECT_EQ(s.label_name(a.labels[0]), "AFTER");
  EXPECT_EQ(a.causal[0], CausalLabel::kNone);
  // With the coupling off the temporal choice ignores causal scores.
  t.causal_scores(0, 1) = 9.0;
  a = map_inference(t, s, {true, true, false});
  EXPECT_EQ(s.label_name(a.labels[0]), "AFTER");
}

TEST(InferenceTest, CausedByForcesBeforeOnFlippedPair) {
  const auto s = LabelScheme::start_point();
  ScoreTable t;
  t.pairs = {{0, 1}, {1, 0}};
  t.scores = Mat::Zero(2, 4);
  t.scores(0, s.label("BEFORE").index) = 0.5;
  t.scores(1, s.label("AFTER").index) = 0.5;
  t.causal_pairs = {{0, 1}};
  t.causal_scores = Mat::Zero(1, 3);
  t.causal_scores(0, 2) = 3.0;  // CAUSED_BY
  const auto a = map_inference(t, s, {true, true, true});
  EXPECT_EQ(a.causal[0], CausalLabel::kCausedBy);
  EXPECT_EQ(names(s, a), (std::vector<std::string>{"AFTER", "BEFORE"}));
}

TEST(InferenceTest, ComponentSplitDoesNotChangeResult) {
  const auto s = LabelScheme::dense();
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    ScoreTable t;
    // Two disjoint triangles plus a lone pair.
    t.pairs = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {6, 7}};
    t.scores = Mat::NullaryExpr(7, 6, [&] { return rng.uniform(-1, 1); });
    const auto cs = ConstraintSet::build(t.pairs, {}, s, {});
    EXPECT_EQ(cs.components().size(), 3u);
    SolveOptions whole;
    whole.split_components = false;
    const auto a = map_inference(t, cs);
    const auto b = map_inference(t, cs, whole);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NEAR(a.objective, b.objective, 1e-12);
  }
}

TEST(InferenceTest, ErrorsAndLimits) {
  const auto dense = LabelScheme::dense();
  ScoreTable t = figure_one(dense);
  EXPECT_THROW(ConstraintSet::build(t.pairs, {}, dense, {true, true, true}), ConfigError);
  SolveOptions tight;
  tight.node_limit = 1;
  Rng rng(4);
  ScoreTable big;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) big.pairs.push_back({i, j});
  }
  big.scores = Mat::NullaryExpr(big.num_pairs(), 6, [&] { return rng.uniform(-1, 1); });
  EXPECT_THROW(map_inference(big, dense, {}, tight), SolverError);
  EXPECT_THROW(brute_force_oracle(big, dense, {}), SolverError);
  SolveStats stats;
  const auto a = map_inference(big, dense, {}, {}, &stats);
  EXPECT_TRUE(stats.certified);
  EXPECT_GT(stats.nodes, 0);
  EXPECT_DOUBLE_EQ(stats.upper_bound, a.objective);
}

TEST(InferenceTest, MaterializedSystem) {
  const auto s = LabelScheme::dense();
  const std::vector<EventPair> pairs = {{0, 1}, {1, 2}, {0, 2}, {1, 0}};
  const auto cs = ConstraintSet::build(pairs, {}, s, {});
  const auto rows = cs.materialize();
  int one_hot = 0, symmetry = 0, transitivity = 0;
  for (const auto& r : rows) {
    one_hot += r.kind == "one-hot";
    symmetry += r.kind == "symmetry";
    transitivity += r.kind == "transitivity";
  }
  EXPECT_EQ(one_hot, 4);
  EXPECT_EQ(symmetry, 6);  // one equality per label of (0,1)
  EXPECT_GT(transitivity, 0);
  for (const auto& r : rows) {
    if (r.kind == "one-hot") {
      EXPECT_EQ(r.sense, LinearConstraint::Sense::kEqual);
      EXPECT_EQ(r.terms.size(), 6u);
    }
  }
}

TEST(ValidateGraphTest, ReportsSymmetryAndCausal) {
  const auto s = LabelScheme::start_point();
  Assignment a;
  a.pairs = {{0, 1}, {1, 0}};
  a.labels = {s.label("BEFORE"), s.label("BEFORE")};
  a.causal_pairs = {{0, 1}};
  a.causal = {CausalLabel::kCausedBy};
  const auto v = validate_graph(a, s, {true, true, true});
  int sym = 0, causal = 0;
  for (const auto& x : v) {
    sym += x.kind == Violation::Kind::kSymmetry;
    causal += x.kind == Violation::Kind::kCausal;
  }
  EXPECT_EQ(sym, 1);
  EXPECT_EQ(causal, 1);
  EXPECT_TRUE(validate_graph(a, s, {false, false, false}).empty());
}

}  // namespace
}  // namespace tempssvm
