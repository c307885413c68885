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

// Exact MAP inference over one instance: choose one label per candidate pair
// (and one causal value per causal pair) maximizing the summed scores,
// subject to symmetry, transitivity and temporal-causal constraints.
//
// The solver is a branch and bound over label domains. Each node runs
// constraint propagation (unit propagation through the binary symmetry and
// causal couplings, generalized arc consistency on transitivity triples)
// and is bounded by the sum of per-variable maxima over the remaining
// domains.
//
// Ties are broken toward the lexicographically smallest label vector,
// ordered by candidate pair position (temporal pairs, then causal pairs)
// and then label index. Objectives within kTieTolerance of the optimum
// count as ties.

#ifndef TEMPSSVM_INFERENCE_H_
#define TEMPSSVM_INFERENCE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tempssvm/label_algebra.h"
#include "tempssvm/structures.h"

namespace tempssvm {

inline constexpr double kTieTolerance = 1e-9;

struct ConstraintFlags {
  bool symmetry = true;
  bool transitivity = true;
  bool causal = false;
};

// One term a * y[var] of a linear constraint over binary indicators.
// Temporal indicator for (pair p, label r) is p * |R| + r; causal indicator
// for (causal pair q, value c) is M * |R| + q * 3 + c.
struct LinearTerm {
  int var = 0;
  int coef = 0;
};

struct LinearConstraint {
  enum class Sense { kLessEq, kEqual };
  std::string kind;  // "one-hot", "symmetry", "transitivity", "causal"
  std::vector<LinearTerm> terms;
  Sense sense = Sense::kLessEq;
  int rhs = 0;
};

class ConstraintSet {
 public:
  struct Binary {
    int a = 0;  // variable indices
    int b = 0;
    std::vector<std::uint32_t> support_ab;  // per label of a: allowed labels of b
    std::vector<std::uint32_t> support_ba;
    enum class Kind { kSymmetry, kCausalSymmetry, kCausal } kind = Kind::kSymmetry;
  };
  struct Triple {
    int ij = 0;  // temporal pair indices
    int jk = 0;
    int ik = 0;
  };

  // Throws ConfigError when the causal flag is set under a scheme without
  // causal labels.
  static ConstraintSet build(const std::vector<EventPair>& pairs, const std::vector<EventPair>& causal_pairs,
                             const LabelScheme& scheme, ConstraintFlags flags);

  ConstraintFlags flags() const { return flags_; }
  int num_pairs() const { return num_pairs_; }
  int num_causal() const { return num_causal_; }
  int num_vars() const { return num_pairs_ + num_causal_; }
  int num_labels() const { return num_labels_; }
  int domain_size(int var) const { return var < num_pairs_ ? num_labels_ : kNumCausalLabels; }

  const std::vector<Binary>& binaries() const { return binaries_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const CompositionTable& composition() const { return composition_; }

  // The inequality system over binary indicators, including one-hot rows.
  // Vacuous transitivity entries are omitted.
  std::vector<LinearConstraint> materialize() const;

  // Splits variables into groups that share no constraint.
  std::vector<std::vector<int>> components() const;

 private:
  ConstraintFlags flags_;
  int num_pairs_ = 0;
  int num_causal_ = 0;
  int num_labels_ = 0;
  CompositionTable composition_;
  std::vector<Binary> binaries_;
  std::vector<Triple> triples_;
};

struct SolveOptions {
  bool split_components = true;
  std::int64_t node_limit = 50'000'000;  // guard; SolverError when exceeded
};

struct SolveStats {
  std::int64_t nodes = 0;
  double upper_bound = 0.0;  // equals the objective on return
  bool certified = false;
};

// Per-pair argmax with no constraints (ties to the lowest label index).
Assignment local_decode(const ScoreTable& scores);

Assignment map_inference(const ScoreTable& scores, const ConstraintSet& constraints,
                         const SolveOptions& options = {}, SolveStats* stats = nullptr);
Assignment map_inference(const ScoreTable& scores, const LabelScheme& scheme, ConstraintFlags flags,
                         const SolveOptions& options = {}, SolveStats* stats = nullptr);

// Scores plus one for every label that differs from gold; the returned
// objective includes the Hamming term.
ScoreTable loss_augment(const ScoreTable& scores, const Assignment& gold);
Assignment loss_augmented_inference(const ScoreTable& scores, const Assignment& gold,
                                    const ConstraintSet& constraints, const SolveOptions& options = {},
                                    SolveStats* stats = nullptr);

// Exhaustive enumeration in lexicographic order. Refuses (SolverError) more
// than `cap` variables.
inline constexpr int kBruteForceCap = 8;
Assignment brute_force_oracle(const ScoreTable& scores, const LabelScheme& scheme, ConstraintFlags flags,
                              int cap = kBruteForceCap);

// Sum of the chosen scores in candidate order.
double assignment_score(const ScoreTable& scores, const Assignment& assignment);

struct Violation {
  enum class Kind { kSymmetry, kTransitivity, kCausal };
  Kind kind;
  std::vector<EventPair> pairs;  // pairs involved, in constraint order
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

// Every violated constraint of the enabled families. Symmetry is checked
// between (i,j) and (j,i) when both are present, transitivity on every
// event triple whose three pairs are present, causal coupling on every
// causal pair.
std::vector<Violation> validate_graph(const Assignment& assignment, const LabelScheme& scheme,
                                      ConstraintFlags flags);

}  // namespace tempssvm

#endif  // TEMPSSVM_INFERENCE_H_
