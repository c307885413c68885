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


#include "tempssvm/metrics.h"

#include <gtest/gtest.h>

#include "oracles/oracles.h"
#include "tempssvm/corpus.h"
#include "tempssvm/error.h"
#include "tempssvm/rng.h"

namespace tempssvm {
namespace {

const std::vector<int> kDenseReverse = {1, 0, 3, 2, 4, 5};

Assignment make(const LabelScheme& s, const std::vector<EventPair>& pairs, const std::vector<std::string>& labels) {
  Assignment a;
  a.pairs = pairs;
  for (const auto& l : labels) a.labels.push_back(s.label(l));
  return a;
}

std::vector<EventPair> ten_pairs() {
  std::vector<EventPair> p;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) p.push_back({i, j});
  }
  return p;
}

TEST(MicroAverageTest, TenPairExclusionExample) {
  const auto s = LabelScheme::dense();
  const auto pairs = ten_pairs();
  // Gold: eight definite labels then two VAGUE.
  const std::vector<std::string> gold_l = {"BEFORE", "AFTER", "INCLUDES", "IS_INCLUDED", "SIMULTANEOUS",
                                           "BEFORE", "AFTER", "BEFORE", "VAGUE", "VAGUE"};
  // Six right, one VAGUE on a definite gold, one wrong definite, two definite
  // on VAGUE golds.
  const std::vector<std::string> pred_l = {"BEFORE", "AFTER", "INCLUDES", "IS_INCLUDED", "SIMULTANEOUS",
                                           "BEFORE", "VAGUE", "AFTER", "BEFORE", "SIMULTANEOUS"};
  const auto gold = make(s, pairs, gold_l), pred = make(s, pairs, pred_l);

  // Independent count on the label strings.
  long correct = 0, predicted = 0, golden = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    predicted += pred_l[k] != "VAGUE";
    golden += gold_l[k] != "VAGUE";
    correct += pred_l[k] == gold_l[k] && gold_l[k] != "VAGUE";
  }
  ASSERT_EQ(correct, 6);
  ASSERT_EQ(predicted, 9);
  ASSERT_EQ(golden, 8);

  const Prf r = micro_average({pred}, {gold}, LabelSet::single(s.label("VAGUE")));
  EXPECT_EQ(r.precision, 6.0 / 9.0);
  EXPECT_EQ(r.recall, 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.f1, 2 * (6.0 / 9.0) * (6.0 / 8.0) / (6.0 / 9.0 + 6.0 / 8.0));
  EXPECT_EQ(r.correct, 6);
  EXPECT_EQ(r.predicted, 9);
  EXPECT_EQ(r.gold, 8);
}

TEST(MicroAverageTest, NoExclusionGivesEqualScores) {
  const auto s = LabelScheme::dense();
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Assignment g, p;
    g.pairs = p.pairs = ten_pairs();
    for (int k = 0; k < 10; ++k) {
      g.labels.push_back(Label{rng.between(0, 5)});
      p.labels.push_back(Label{rng.between(0, 5)});
    }
    const Prf r = micro_average({p}, {g});
    EXPECT_EQ(r.precision, r.recall);
    EXPECT_DOUBLE_EQ(r.f1, r.precision);
  }
  Assignment g = make(s, {{0, 1}}, {"BEFORE"});
  const Prf same = micro_average({g}, {g});
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);
}

TEST(MicroAverageTest, DomainMismatchIsAnError) {
  const auto s = LabelScheme::dense();
  const auto a = make(s, {{0, 1}, {1, 2}}, {"BEFORE", "AFTER"});
  const auto b = make(s, {{0, 1}, {0, 2}}, {"BEFORE", "AFTER"});
  EXPECT_THROW(micro_average({a}, {b}), DataError);
  EXPECT_EQ(pair_domain_diff(a, b).size(), 2u);
}

TEST(EvaluateTest, ConfusionCountsAreConsistent) {
  const auto s = LabelScheme::dense();
  Rng rng(2);
  Assignment g, p;
  g.pairs = p.pairs = ten_pairs();
  for (int k = 0; k < 10; ++k) {
    g.labels.push_back(Label{rng.between(0, 5)});
    p.labels.push_back(Label{rng.between(0, 5)});
  }
  const EvalReport r = evaluate({p}, {g}, s);
  long total = 0;
  for (std::size_t gi = 0; gi < r.confusion.size(); ++gi) {
    long row = 0;
    for (long c : r.confusion[gi]) row += c;
    long expected = 0;
    for (Label l : g.labels) expected += l.index == static_cast<int>(gi);
    EXPECT_EQ(row, expected);
    total += row;
  }
  EXPECT_EQ(total, 10);
  EXPECT_EQ(r.pairs, 10);
  for (const auto& prf : r.per_label) {
    EXPECT_GE(prf.f1, 0.0);
    EXPECT_LE(prf.f1, 1.0);
  }
  EXPECT_NE(r.to_text().find("micro"), std::string::npos);
  EXPECT_NE(r.to_json().find("\"micro\""), std::string::npos);
}

TEST(ClosureTest, BeforeThenSimultaneous) {
  const auto s = LabelScheme::dense();
  RelationGraph g = {{{0, 1}, s.label("BEFORE")}, {{1, 2}, s.label("SIMULTANEOUS")}};
  const auto c = closure(g, s);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.at({0, 2}), s.label("BEFORE"));
  EXPECT_EQ(closure(c, s), c);
}

TEST(ClosureTest, ContradictionIsReported) {
  const auto s = LabelScheme::dense();
  RelationGraph g = {{{0, 1}, s.label("BEFORE")}, {{1, 2}, s.label("BEFORE")}, {{0, 2}, s.label("AFTER")}};
  const auto r = closure_with_report(g, s);
  EXPECT_FALSE(r.inconsistencies.empty());
  EXPECT_EQ(r.graph.at({0, 2}), s.label("AFTER"));
}

// Greedy reduction written against the oracle closure.
oracle::Graph oracle_reduce(const oracle::Graph& g, int n, const std::vector<std::vector<std::set<int>>>& table) {
  oracle::Graph kept = g;
  for (const auto& [edge, label] : g) {
    oracle::Graph rest = kept;
    rest.erase(edge);
    const auto c = oracle::closure(rest, n, table, kDenseReverse, 5);
    auto it = c.find(edge);
    if (it != c.end() && it->second == label) kept = rest;
  }
  return kept;
}

oracle::Graph to_oracle(const RelationGraph& g) {
  oracle::Graph out;
  for (const auto& [p, l] : g) out[{p.first, p.second}] = l.index;
  return out;
}

// Random consistent graph: definite labels read off random intervals, each
// edge kept with probability 0.6.
RelationGraph random_graph(Rng& rng, int n, const LabelScheme& s) {
  std::vector<EventTime> t;
  for (int i = 0; i < n; ++i) {
    const int a = rng.between(0, 6);
    t.push_back({a, a + rng.between(1, 3)});
  }
  RelationGraph g;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Label l = label_for_times(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)], s);
      if (l != s.label("VAGUE") && rng.bernoulli(0.6)) g[{i, j}] = l;
    }
  }
  return g;
}

TEST(ClosureTest, RandomGraphsAgreeWithOracle) {
  const auto s = LabelScheme::dense();
  const auto table = oracle::composition(true);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const int n = rng.between(3, 6);
    const RelationGraph g = random_graph(rng, n, s);
    const auto c = closure(g, s);
    EXPECT_EQ(to_oracle(c), oracle::closure(to_oracle(g), n, table, kDenseReverse, 5)) << seed;
    const auto r = reduce(g, s);
    EXPECT_EQ(to_oracle(r), oracle_reduce(to_oracle(g), n, table)) << seed;
    EXPECT_EQ(closure(r, s), c) << seed;
    EXPECT_EQ(closure(c, s), c) << seed;
  }
}

TEST(TemporalAwarenessTest, IdenticalGraphs) {
  const auto s = LabelScheme::dense();
  RelationGraph g = {{{0, 1}, s.label("BEFORE")}, {{1, 2}, s.label("INCLUDES")}, {{0, 2}, s.label("BEFORE")}};
  const Prf r = temporal_awareness(g, g, s);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(TemporalAwarenessTest, ChainWithOnlyTheLongEdge) {
  const auto s = LabelScheme::dense();
  const auto table = oracle::composition(true);
  const RelationGraph gold = {{{0, 1}, s.label("BEFORE")}, {{1, 2}, s.label("BEFORE")}, {{0, 2}, s.label("BEFORE")}};
  const RelationGraph pred = {{{0, 2}, s.label("BEFORE")}};

  // Oracle: reduce(gold) keeps the two chain edges, closure(pred) is just
  // (a,c), so no reduced gold edge is recovered.
  const auto g_red = oracle_reduce(to_oracle(gold), 3, table);
  const auto p_red = oracle_reduce(to_oracle(pred), 3, table);
  const auto g_clo = oracle::closure(to_oracle(gold), 3, table, kDenseReverse, 5);
  const auto p_clo = oracle::closure(to_oracle(pred), 3, table, kDenseReverse, 5);
  auto hits = [](const oracle::Graph& a, const oracle::Graph& b) {
    long n = 0;
    for (const auto& [e, l] : a) n += b.count(e) && b.at(e) == l;
    return n;
  };
  ASSERT_EQ(g_red.size(), 2u);
  const double p = static_cast<double>(hits(p_red, g_clo)) / static_cast<double>(p_red.size());
  const double rcl = static_cast<double>(hits(g_red, p_clo)) / static_cast<double>(g_red.size());
  ASSERT_EQ(p, 1.0);
  ASSERT_EQ(rcl, 0.0);

  const Prf r = temporal_awareness(pred, gold, s);
  EXPECT_EQ(r.precision, p);
  EXPECT_EQ(r.recall, rcl);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(TemporalAwarenessTest, EmptyPrediction) {
  const auto s = LabelScheme::dense();
  const RelationGraph gold = {{{0, 1}, s.label("BEFORE")}};
  const Prf r = temporal_awareness(RelationGraph{}, gold, s);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
}

TEST(TemporalAwarenessTest, VagueEdgesAreIgnored) {
  const auto s = LabelScheme::dense();
  const auto a = make(s, {{0, 1}, {1, 2}}, {"BEFORE", "VAGUE"});
  EXPECT_EQ(to_graph(a, s).size(), 1u);
  const auto flipped = make(s, {{1, 0}}, {"AFTER"});
  EXPECT_EQ(to_graph(flipped, s).at({0, 1}), s.label("BEFORE"));
  EXPECT_EQ(edge_label(to_graph(flipped, s), 1, 0, s), s.label("AFTER"));
}

TEST(McNemarTest, ExactValues) {
  EXPECT_EQ(mcnemar(1, 9).p_exact, 0.021484375);
  EXPECT_EQ(mcnemar(9, 1).p_exact, 0.021484375);
  const auto none = mcnemar(0, 0);
  EXPECT_EQ(none.p_exact, 1.0);
  EXPECT_FALSE(none.note.empty());
  for (long b = 1; b <= 20; ++b) EXPECT_GE(mcnemar(b, b).p_exact, 0.5);
  EXPECT_FALSE(mcnemar(3, 4).p_chi_square.has_value());
  const auto big = mcnemar(10, 30);
  ASSERT_TRUE(big.p_chi_square.has_value());
  // (|10-30|-1)^2/40 = 9.025; survival of chi-square(1) = erfc(sqrt(x/2)).
  EXPECT_NEAR(*big.p_chi_square, std::erfc(std::sqrt(9.025 / 2)), 1e-12);
}

TEST(McNemarTest, CountsFromAssignments) {
  const auto s = LabelScheme::dense();
  const auto gold = make(s, {{0, 1}, {1, 2}, {0, 2}}, {"BEFORE", "AFTER", "BEFORE"});
  const auto a = make(s, {{0, 1}, {1, 2}, {0, 2}}, {"BEFORE", "AFTER", "AFTER"});
  const auto b = make(s, {{0, 1}, {1, 2}, {0, 2}}, {"AFTER", "AFTER", "BEFORE"});
  const auto r = mcnemar({a}, {b}, {gold});
  EXPECT_EQ(r.b, 1);
  EXPECT_EQ(r.c, 1);
}

}  // namespace
}  // namespace tempssvm
