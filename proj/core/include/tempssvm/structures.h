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

// Value types shared by every stage of the pipeline.

#ifndef TEMPSSVM_STRUCTURES_H_
#define TEMPSSVM_STRUCTURES_H_

#include <Eigen/Core>
#include <compare>
#include <string>
#include <vector>

#include "tempssvm/label_algebra.h"

namespace tempssvm {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Ordered pair of event indices within one document.
struct EventPair {
  int first = 0;
  int second = 0;
  EventPair flipped() const { return {second, first}; }
  friend auto operator<=>(const EventPair&, const EventPair&) = default;
};

// Scores S(y^r_{i,j}; x) for every candidate pair of one instance: one row
// of |R| temporal scores per pair, and optionally one row of
// kNumCausalLabels scores per causal pair.
struct ScoreTable {
  std::string doc_id;
  std::vector<EventPair> pairs;
  Mat scores;
  std::vector<EventPair> causal_pairs;
  Mat causal_scores;

  int num_pairs() const { return static_cast<int>(pairs.size()); }
  int num_causal() const { return static_cast<int>(causal_pairs.size()); }
};

// One label per candidate pair. `objective` is the decoder's objective value
// (zero for gold assignments).
struct Assignment {
  std::vector<EventPair> pairs;
  std::vector<Label> labels;
  std::vector<EventPair> causal_pairs;
  std::vector<CausalLabel> causal;
  double objective = 0.0;

  int size() const { return static_cast<int>(pairs.size() + causal_pairs.size()); }
};

}  // namespace tempssvm

#endif  // TEMPSSVM_STRUCTURES_H_
