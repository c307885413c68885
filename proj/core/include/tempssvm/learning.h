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

// Two-stage training. Stage one fits the local scorer with pairwise
// cross-entropy and Adam; stage two fine-tunes it with the structured hinge
//
//   L_n = (1/M_n) max(0, Δ(y, ŷ) + S(ŷ) - S(y))
//
// using per-document momentum SGD, where ŷ comes from (loss-augmented)
// global inference, and C||Φ||² enters as weight decay.

#ifndef TEMPSSVM_LEARNING_H_
#define TEMPSSVM_LEARNING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tempssvm/corpus.h"
#include "tempssvm/inference.h"
#include "tempssvm/metrics.h"
#include "tempssvm/scoring.h"

namespace tempssvm {

struct TrainConfig {
  std::string preset = "synthetic";
  ModelConfig model;
  int window = 1;
  Direction direction = Direction::kBoth;  // training pairs
  ConstraintFlags constraints;
  std::vector<std::string> exclude;  // labels left out of dev micro-F1

  // Stage one: Adam on mean cross-entropy.
  double local_lr = 0.002;
  int local_epochs = 30;
  int batch_docs = 4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Stage two: momentum SGD on the structured hinge.
  double global_lr = 0.05;
  double global_decay = 0.7;  // lr at epoch e is global_lr * global_decay^e
  double momentum = 0.9;
  double c = 1e-4;  // weight of ||Φ||², applied as weight decay 2CΦ
  int global_epochs = 10;
  bool early_stopping = true;
  int patience = 5;
  bool augmented = true;  // loss-augmented ŷ; false uses the plain MAP structure

  std::vector<std::uint64_t> seeds = {1};
  int jobs = 1;

  void validate() const;  // throws ConfigError
};

// Named presets: "tbdense", "matres", "tcr" and "synthetic".
TrainConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

// Instances of one split with their fixed word vectors.
struct Dataset {
  std::vector<std::shared_ptr<const Document>> docs;
  std::vector<Instance> forward;  // unaugmented
  std::vector<Mat> words;         // per document

  std::size_t size() const { return forward.size(); }
};

Dataset make_dataset(const std::vector<Document>& docs, const EmbeddingSource& embeddings, int window = 1);

// ---------------------------------------------------------------------------
// Decoding.

struct DecodeOptions {
  bool global = true;
  ConstraintFlags constraints;
  Direction direction = Direction::kForward;  // pairs to report
  SolveOptions solve;
};

// Scores and decodes one forward instance. Global decoding with symmetry
// solves over both pair orders jointly and then keeps the requested
// direction; all other modes score only the requested pairs.
Assignment decode_instance(const Instance& forward, const Mat& words, const ModelParams& params,
                           const LabelScheme& scheme, const DecodeOptions& options, ScoreTable* scores_out = nullptr);

struct DecodedSplit {
  std::vector<Assignment> predicted;
  std::vector<Assignment> gold;
  std::vector<ScoreTable> scores;
  long violations = 0;  // under symmetry + transitivity (+ causal when set)
  long docs_with_violations = 0;
};

DecodedSplit decode_dataset(const Dataset& data, const ModelParams& params, const LabelScheme& scheme,
                            const DecodeOptions& options, int jobs = 1);

// ---------------------------------------------------------------------------
// Losses.

// Number of differing labels; throws DataError on domain mismatch.
int hamming(const Assignment& a, const Assignment& b);

// (1/M) max(0, Δ(gold, ŷ) + S(ŷ) - S(gold)).
double ssvm_instance_loss(const ScoreTable& scores, const Assignment& gold, const Assignment& yhat, int m);

// Sum of pairwise cross-entropies times `scale`; gradients (times `scale`)
// are added into `grads` when non-null.
double local_loss(const Instance& instance, const Mat& words, const ModelParams& params, Rng* dropout_rng,
                  ModelParams* grads, double scale);

struct HingeResult {
  double loss = 0.0;
  int hamming = 0;
  double score_gap = 0.0;  // S(ŷ) - S(gold)
  Assignment yhat;
};

// Structured hinge of one instance and, when `grads` is non-null, its
// subgradient (without the regularizer). With `pinned` the given ŷ is used
// instead of running inference.
HingeResult hinge_loss(const Instance& instance, const Mat& words, const ModelParams& params,
                       const LabelScheme& scheme, const ConstraintSet& constraints, bool augmented, Rng* dropout_rng,
                       ModelParams* grads, const Assignment* pinned = nullptr);

// ---------------------------------------------------------------------------
// Training loops.

struct EpochRecord {
  std::string stage;  // "local" or "global"
  std::uint64_t seed = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double lr = 0.0;
  Prf dev;
  long dev_violations = 0;
  long hinge_active = 0;  // stage two: instances with positive hinge
  long skipped = 0;       // stage two: instances whose inference failed
  bool selected = false;
  double seconds = 0.0;  // wall clock; not part of to_json() so logs stay reproducible

  std::string to_json() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  ModelParams params;
  int best_epoch = -1;  // -1: the starting parameters were kept
  double best_dev_f1 = 0.0;
  std::vector<EpochRecord> history;
};

TrainResult train_local(const Dataset& train, const Dataset& dev, const LabelScheme& scheme,
                        const TrainConfig& config, std::uint64_t seed, const EpochCallback& on_epoch = {});
// Warm-started from `start` (normally stage-one output).
TrainResult train_global(const Dataset& train, const Dataset& dev, const LabelScheme& scheme,
                         const TrainConfig& config, const ModelParams& start, std::uint64_t seed,
                         const EpochCallback& on_epoch = {});

// Model configuration for a scheme/corpus pair under `config`.
ModelConfig model_config_for(const TrainConfig& config, const LabelScheme& scheme, const EmbeddingSource& embeddings,
                             std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace tempssvm

#endif  // TEMPSSVM_LEARNING_H_
