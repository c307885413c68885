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

// Local pairwise scorer: fixed word vectors and trainable POS embeddings are
// concatenated and projected, run through a stacked bidirectional LSTM, and
// the forward/backward states of the two event tokens (optionally with
// pair features) feed an affine head over the relation labels. A second
// head scores causal labels when enabled.

#ifndef TEMPSSVM_SCORING_H_
#define TEMPSSVM_SCORING_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tempssvm/corpus.h"
#include "tempssvm/rng.h"
#include "tempssvm/structures.h"

namespace tempssvm {

struct ModelConfig {
  std::string scheme;
  int num_labels = 6;
  int num_tags = 16;
  int d_word = 16;
  int d_pos = 8;
  int d_in = 32;
  int d_hid = 60;
  int layers = 1;
  double dropout = 0.5;
  bool use_features = false;
  bool causal_head = false;
  std::uint64_t seed = 1;

  int feature_dim() const;
  int head_input_dim() const { return 4 * d_hid + (use_features ? feature_dim() : 0); }
  void validate() const;  // throws ConfigError
};

// Distance buckets {0,1,2,3,4,5+} followed by tense and polarity one-hots of
// both events.
inline constexpr int kDistanceBuckets = 6;

struct PairFeatures {
  int token_distance = 0;
  int tense_i = 0;
  int tense_j = 0;
  int polarity_i = 0;
  int polarity_j = 0;
};

PairFeatures pair_features(const Document& doc, EventPair pair);
Vec encode_features(const PairFeatures& f);

enum class Head { kTemporal, kCausal };

struct LstmWeights {
  Mat w_input;      // 4h x in, gate rows ordered [input, forget, cell, output]
  Mat w_recurrent;  // 4h x h
  Mat bias;         // 1 x 4h
};

// Trainable tensors. Word vectors are not parameters: they come from an
// EmbeddingSource and stay fixed.
struct ModelParams {
  ModelConfig config;
  Mat pos_embedding;  // num_tags x d_pos
  Mat proj_weight;    // d_in x (d_word + d_pos)
  Mat proj_bias;      // 1 x d_in
  std::vector<std::array<LstmWeights, 2>> lstm;  // [layer][forward, backward]
  Mat temporal_weight;  // |R| x head_input_dim
  Mat temporal_bias;    // 1 x |R|
  Mat causal_weight;    // kNumCausalLabels x head_input_dim, empty without causal head
  Mat causal_bias;

  // Fan-in scaled uniform for affine maps, orthogonal recurrent blocks.
  static ModelParams init(const ModelConfig& config);
  static ModelParams zeros_like(const ModelParams& other);

  // Visits every tensor in a fixed order with a stable name.
  void for_each(const std::function<void(const std::string&, Mat&)>& fn);
  void for_each(const std::function<void(const std::string&, const Mat&)>& fn) const;
  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
  std::vector<std::string> tensor_names() const;

  bool all_finite() const;
  double squared_norm() const;
  void set_zero();
  // this += scale * other (same shapes).
  void add_scaled(const ModelParams& other, double scale);
};

// Final-layer states per token.
struct EncodedDocument {
  Mat forward;   // N x d_hid
  Mat backward;  // N x d_hid
  int size() const { return static_cast<int>(forward.rows()); }
};

// One forward pass over a document that keeps what backpropagation needs.
// With `dropout_rng` null the pass runs in evaluation mode and is a pure
// function of (params, inputs).
class DocumentPass {
 public:
  DocumentPass(const ModelParams& params, const Mat& word_vectors, std::span<const int> pos_tags,
               Rng* dropout_rng = nullptr);

  const EncodedDocument& encoded() const { return encoded_; }
  const Mat& token_inputs() const { return projected_; }

  // Raw (pre-softmax) scores for the events at tokens (token_i, token_j).
  Vec score(int token_i, int token_j, Head head, const PairFeatures* features = nullptr) const;

  // Accumulates d loss / d scores of one pair into head gradients and into
  // the per-token state gradients; call backward() once afterwards.
  void backprop_score(int token_i, int token_j, Head head, const PairFeatures* features, const Vec& d_scores,
                      ModelParams& grads);
  void backward(ModelParams& grads);

  // d loss / d word vectors from the last backward(). Reported for
  // inspection only; word vectors are never updated.
  const Mat& word_vector_grad() const { return d_word_; }

 private:
  struct DirectionCache {
    Mat gates;   // N x 4h, post-activation
    Mat cells;   // N x h
    Mat hidden;  // N x h
    Mat tanh_cells;
  };
  struct LayerCache {
    Mat input;  // N x in
    std::array<DirectionCache, 2> dir;
    Mat dropout_mask;  // N x 2h, empty in evaluation mode
    Mat output;        // N x 2h after dropout
  };

  Vec head_input(int token_i, int token_j, const PairFeatures* features) const;
  void run_direction(const LstmWeights& w, const Mat& input, bool reverse, DirectionCache& cache) const;
  Mat backprop_direction(const LstmWeights& w, const Mat& input, bool reverse, const DirectionCache& cache,
                         const Mat& d_hidden, LstmWeights& grads) const;

  const ModelParams& params_;
  std::vector<int> pos_tags_;
  Mat word_vectors_;
  Mat token_concat_;  // N x (d_word + d_pos)
  Mat projected_;     // N x d_in
  std::vector<LayerCache> layers_;
  EncodedDocument encoded_;
  Mat d_output_;  // N x 2h, gradient w.r.t. final layer output
  Mat d_word_;
};

// Per-token input vectors: concat(word, pos embedding) then projection.
Mat embed_tokens(const Document& doc, const EmbeddingSource& embeddings, const ModelParams& params);
EncodedDocument encode_context(const Mat& word_vectors, std::span<const int> pos_tags, const ModelParams& params);

// Raw scores for one pair of event indices (evaluation mode).
Vec score_pair(const DocumentPass& pass, const Document& doc, EventPair pair, Head head, const ModelParams& params);

// Score table for every candidate (and causal) pair of an instance,
// evaluation mode.
ScoreTable score_instance(const Instance& instance, const ModelParams& params, const EmbeddingSource& embeddings);
ScoreTable score_instance(const Instance& instance, const DocumentPass& pass, const ModelParams& params);

Vec softmax(const Vec& scores);
Vec log_softmax(const Vec& scores);

}  // namespace tempssvm

#endif  // TEMPSSVM_SCORING_H_
