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

// Evaluation: micro-averaged P/R/F1 with label exclusion, per-label
// breakdowns and confusion matrices, the graph-level temporal awareness
// score, closure/reduction of relation graphs, and McNemar's test.

#ifndef TEMPSSVM_METRICS_H_
#define TEMPSSVM_METRICS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempssvm/label_algebra.h"
#include "tempssvm/structures.h"

namespace tempssvm {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long correct = 0;
  long predicted = 0;  // denominator of precision
  long gold = 0;       // denominator of recall
};

// 2PR / (P + R), zero when either is zero.
double f1_score(double precision, double recall);
Prf make_prf(long correct, long predicted, long gold);

// Throws DataError listing the differing pairs when the domains differ.
void check_same_domain(const Assignment& pred, const Assignment& gold, const std::string& doc_id = "");
std::vector<std::string> pair_domain_diff(const Assignment& pred, const Assignment& gold);

// Precision over predictions outside `exclude`, recall over gold labels
// outside `exclude`; a pair counts as correct when both agree on a label
// outside `exclude`. Temporal pairs only.
Prf micro_average(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold, LabelSet exclude = {});
// Causal pairs, with NONE excluded.
Prf causal_micro_average(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold);

struct EvalReport {
  std::vector<std::string> label_names;
  std::vector<Prf> per_label;
  Prf micro;
  std::optional<Prf> causal;
  std::vector<std::string> excluded;
  std::vector<std::vector<long>> confusion;  // [gold][pred]
  long violations = 0;
  std::string direction = "forward";
  long pairs = 0;

  std::string to_text() const;
  std::string to_json() const;
};

EvalReport evaluate(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold,
                    const LabelScheme& scheme, LabelSet exclude = {});

// ---------------------------------------------------------------------------
// Relation graphs. Edges are stored once per unordered pair, oriented so the
// smaller event index comes first; VAGUE edges are never stored.

using RelationGraph = std::map<EventPair, Label>;

RelationGraph to_graph(const Assignment& assignment, const LabelScheme& scheme);
// Label of (i, j) reading the stored edge in either orientation.
std::optional<Label> edge_label(const RelationGraph& g, int i, int j, const LabelScheme& scheme);

struct ClosureResult {
  RelationGraph graph;
  // Derived edges that contradicted an existing edge; the derived edge is
  // dropped and the earlier one kept.
  std::vector<EventPair> inconsistencies;
};

// Adds (i,k) whenever (i,j), (j,k) compose to a single definite label, until
// nothing changes.
ClosureResult closure_with_report(const RelationGraph& g, const LabelScheme& scheme);
RelationGraph closure(const RelationGraph& g, const LabelScheme& scheme);
// Greedily removes, in ascending pair order, each edge implied by the
// closure of the remaining edges.
RelationGraph reduce(const RelationGraph& g, const LabelScheme& scheme);

// P = |reduce(pred) ∩ closure(gold)| / |reduce(pred)|,
// R = |reduce(gold) ∩ closure(pred)| / |reduce(gold)|, definite labels only.
Prf temporal_awareness(const RelationGraph& pred, const RelationGraph& gold, const LabelScheme& scheme);
Prf temporal_awareness(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold,
                       const LabelScheme& scheme);

// ---------------------------------------------------------------------------

struct McNemarResult {
  long b = 0;  // A right, B wrong
  long c = 0;  // A wrong, B right
  double p_exact = 1.0;
  std::optional<double> p_chi_square;  // continuity corrected, when b + c >= 25
  std::string note;
};

McNemarResult mcnemar(long b, long c);
McNemarResult mcnemar(const std::vector<Assignment>& pred_a, const std::vector<Assignment>& pred_b,
                      const std::vector<Assignment>& gold);

}  // namespace tempssvm

#endif  // TEMPSSVM_METRICS_H_
