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

#include <Eigen/QR>
#include <cmath>

#include "tempssvm/error.h"

namespace tempssvm {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Mat& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

Mat orthogonal(int n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

int distance_bucket(int distance) { return std::min(distance, kDistanceBuckets - 1); }

}  // namespace

int ModelConfig::feature_dim() const { return kDistanceBuckets + 2 * (kNumTenses + kNumPolarities); }

void ModelConfig::validate() const {
  if (num_labels < 1 || num_tags < 1 || d_word < 1 || d_pos < 1 || d_in < 1 || d_hid < 1 || layers < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

PairFeatures pair_features(const Document& doc, EventPair pair) {
  const Event& a = doc.events.at(static_cast<std::size_t>(pair.first));
  const Event& b = doc.events.at(static_cast<std::size_t>(pair.second));
  return {std::abs(b.token - a.token), a.tense, b.tense, a.polarity, b.polarity};
}

Vec encode_features(const PairFeatures& f) {
  Vec v = Vec::Zero(kDistanceBuckets + 2 * (kNumTenses + kNumPolarities));
  int off = 0;
  v[off + distance_bucket(f.token_distance)] = 1.0;
  off += kDistanceBuckets;
  v[off + f.tense_i] = 1.0;
  off += kNumTenses;
  v[off + f.polarity_i] = 1.0;
  off += kNumPolarities;
  v[off + f.tense_j] = 1.0;
  off += kNumTenses;
  v[off + f.polarity_j] = 1.0;
  return v;
}

// ---------------------------------------------------------------------------

ModelParams ModelParams::init(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(splitmix64(config.seed ^ 0x5eedULL));

  p.pos_embedding = Mat(config.num_tags, config.d_pos);
  fill_uniform(p.pos_embedding, std::sqrt(3.0 / config.d_pos), rng);

  const int concat = config.d_word + config.d_pos;
  p.proj_weight = Mat(config.d_in, concat);
  p.proj_bias = Mat(1, config.d_in);
  fill_uniform(p.proj_weight, 1.0 / std::sqrt(concat), rng);
  fill_uniform(p.proj_bias, 1.0 / std::sqrt(concat), rng);

  const int h = config.d_hid;
  for (int l = 0; l < config.layers; ++l) {
    const int in = l == 0 ? config.d_in : 2 * h;
    std::array<LstmWeights, 2> layer;
    for (auto& w : layer) {
      w.w_input = Mat(4 * h, in);
      fill_uniform(w.w_input, 1.0 / std::sqrt(in), rng);
      w.w_recurrent = Mat(4 * h, h);
      for (int g = 0; g < 4; ++g) w.w_recurrent.block(g * h, 0, h, h) = orthogonal(h, rng);
      w.bias = Mat(1, 4 * h);
      fill_uniform(w.bias, 1.0 / std::sqrt(h), rng);
    }
    p.lstm.push_back(std::move(layer));
  }

  const int head_in = config.head_input_dim();
  p.temporal_weight = Mat(config.num_labels, head_in);
  p.temporal_bias = Mat(1, config.num_labels);
  fill_uniform(p.temporal_weight, 1.0 / std::sqrt(head_in), rng);
  fill_uniform(p.temporal_bias, 1.0 / std::sqrt(head_in), rng);
  if (config.causal_head) {
    p.causal_weight = Mat(kNumCausalLabels, head_in);
    p.causal_bias = Mat(1, kNumCausalLabels);
    fill_uniform(p.causal_weight, 1.0 / std::sqrt(head_in), rng);
    fill_uniform(p.causal_bias, 1.0 / std::sqrt(head_in), rng);
  }
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p = other;
  p.set_zero();
  return p;
}

void ModelParams::for_each(const std::function<void(const std::string&, Mat&)>& fn) {
  fn("pos_embedding", pos_embedding);
  fn("projection.weight", proj_weight);
  fn("projection.bias", proj_bias);
  for (std::size_t l = 0; l < lstm.size(); ++l) {
    for (int d = 0; d < 2; ++d) {
      const std::string prefix = "lstm." + std::to_string(l) + (d == 0 ? ".forward." : ".backward.");
      fn(prefix + "w_input", lstm[l][static_cast<std::size_t>(d)].w_input);
      fn(prefix + "w_recurrent", lstm[l][static_cast<std::size_t>(d)].w_recurrent);
      fn(prefix + "bias", lstm[l][static_cast<std::size_t>(d)].bias);
    }
  }
  fn("temporal_head.weight", temporal_weight);
  fn("temporal_head.bias", temporal_bias);
  if (config.causal_head) {
    fn("causal_head.weight", causal_weight);
    fn("causal_head.bias", causal_bias);
  }
}

void ModelParams::for_each(const std::function<void(const std::string&, const Mat&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each([&](const std::string& name, Mat& m) { fn(name, m); });
}

std::vector<Mat*> ModelParams::tensors() {
  std::vector<Mat*> out;
  for_each([&](const std::string&, Mat& m) { out.push_back(&m); });
  return out;
}

std::vector<const Mat*> ModelParams::tensors() const {
  std::vector<const Mat*> out;
  for_each([&](const std::string&, const Mat& m) { out.push_back(&m); });
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out;
  for_each([&](const std::string& name, const Mat&) { out.push_back(name); });
  return out;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
  return ok;
}

double ModelParams::squared_norm() const {
  double s = 0;
  for_each([&](const std::string&, const Mat& m) { s += m.squaredNorm(); });
  return s;
}

void ModelParams::set_zero() {
  for_each([](const std::string&, Mat& m) { m.setZero(); });
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  auto mine = tensors();
  auto theirs = other.tensors();
  if (mine.size() != theirs.size()) throw InvariantError("parameter sets differ in layout");
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += scale * *theirs[i];
}

// ---------------------------------------------------------------------------

DocumentPass::DocumentPass(const ModelParams& params, const Mat& word_vectors, std::span<const int> pos_tags,
                           Rng* dropout_rng)
    : params_(params), pos_tags_(pos_tags.begin(), pos_tags.end()), word_vectors_(word_vectors) {
  const ModelConfig& cfg = params.config;
  const auto n = static_cast<Eigen::Index>(pos_tags_.size());
  if (n == 0) throw DataError("cannot encode an empty token sequence");
  if (word_vectors.rows() != n) throw DataError("word vector rows do not match token count");
  if (word_vectors.cols() != cfg.d_word) {
    throw DataError("word vectors have dimension " + std::to_string(word_vectors.cols()) + ", model expects " +
                    std::to_string(cfg.d_word));
  }

  token_concat_ = Mat(n, cfg.d_word + cfg.d_pos);
  token_concat_.leftCols(cfg.d_word) = word_vectors;
  for (Eigen::Index t = 0; t < n; ++t) {
    const int tag = pos_tags_[static_cast<std::size_t>(t)];
    if (tag < 0 || tag >= cfg.num_tags) {
      throw DataError("pos tag " + std::to_string(tag) + " outside the embedding table (" +
                      std::to_string(cfg.num_tags) + " tags)");
    }
    token_concat_.row(t).tail(cfg.d_pos) = params.pos_embedding.row(tag);
  }
  projected_ = token_concat_ * params.proj_weight.transpose();
  projected_.rowwise() += params.proj_bias.row(0);

  const int h = cfg.d_hid;
  const Mat* input = &projected_;
  layers_.resize(params.lstm.size());
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    LayerCache& cache = layers_[l];
    cache.input = *input;
    run_direction(params.lstm[l][0], cache.input, false, cache.dir[0]);
    run_direction(params.lstm[l][1], cache.input, true, cache.dir[1]);
    cache.output = Mat(n, 2 * h);
    cache.output.leftCols(h) = cache.dir[0].hidden;
    cache.output.rightCols(h) = cache.dir[1].hidden;
    if (dropout_rng && cfg.dropout > 0.0) {
      const double keep = 1.0 - cfg.dropout;
      cache.dropout_mask = Mat(n, 2 * h);
      for (Eigen::Index i = 0; i < cache.dropout_mask.size(); ++i) {
        cache.dropout_mask.data()[i] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      }
      cache.output = cache.output.cwiseProduct(cache.dropout_mask);
    }
    input = &cache.output;
  }
  encoded_.forward = layers_.back().output.leftCols(h);
  encoded_.backward = layers_.back().output.rightCols(h);
  d_output_ = Mat::Zero(n, 2 * h);
}

void DocumentPass::run_direction(const LstmWeights& w, const Mat& input, bool reverse, DirectionCache& cache) const {
  const auto n = input.rows();
  const int h = params_.config.d_hid;
  Mat pre = input * w.w_input.transpose();
  pre.rowwise() += w.bias.row(0);
  cache.gates = Mat(n, 4 * h);
  cache.cells = Mat(n, h);
  cache.hidden = Mat(n, h);
  cache.tanh_cells = Mat(n, h);
  Vec h_prev = Vec::Zero(h);
  Vec c_prev = Vec::Zero(h);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index t = reverse ? n - 1 - k : k;
    Vec z = pre.row(t).transpose() + w.w_recurrent * h_prev;
    for (int u = 0; u < h; ++u) {
      z[u] = sigmoid(z[u]);
      z[h + u] = sigmoid(z[h + u]);
      z[2 * h + u] = std::tanh(z[2 * h + u]);
      z[3 * h + u] = sigmoid(z[3 * h + u]);
    }
    Vec c = z.segment(h, h).cwiseProduct(c_prev) + z.head(h).cwiseProduct(z.segment(2 * h, h));
    Vec tc = c.array().tanh();
    Vec hid = z.tail(h).cwiseProduct(tc);
    cache.gates.row(t) = z.transpose();
    cache.cells.row(t) = c.transpose();
    cache.tanh_cells.row(t) = tc.transpose();
    cache.hidden.row(t) = hid.transpose();
    h_prev = hid;
    c_prev = c;
  }
}

Mat DocumentPass::backprop_direction(const LstmWeights& w, const Mat& input, bool reverse,
                                     const DirectionCache& cache, const Mat& d_hidden, LstmWeights& grads) const {
  const auto n = input.rows();
  const int h = params_.config.d_hid;
  Mat d_pre(n, 4 * h);
  Vec dh_next = Vec::Zero(h);
  Vec dc_next = Vec::Zero(h);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const Eigen::Index t = reverse ? n - 1 - k : k;
    const Eigen::Index prev = reverse ? t + 1 : t - 1;
    const bool has_prev = k > 0;
    auto gates = cache.gates.row(t);
    Vec dh = d_hidden.row(t).transpose() + dh_next;
    Vec dz(4 * h);
    Vec dc(h);
    for (int u = 0; u < h; ++u) {
      const double ig = gates[u], fg = gates[h + u], cg = gates[2 * h + u], og = gates[3 * h + u];
      const double tc = cache.tanh_cells(t, u);
      const double c_prev = has_prev ? cache.cells(prev, u) : 0.0;
      const double d_o = dh[u] * tc;
      const double d_c = dc_next[u] + dh[u] * og * (1.0 - tc * tc);
      dz[u] = d_c * cg * ig * (1.0 - ig);
      dz[h + u] = d_c * c_prev * fg * (1.0 - fg);
      dz[2 * h + u] = d_c * ig * (1.0 - cg * cg);
      dz[3 * h + u] = d_o * og * (1.0 - og);
      dc[u] = d_c * fg;
    }
    d_pre.row(t) = dz.transpose();
    if (has_prev) grads.w_recurrent.noalias() += dz * cache.hidden.row(prev);
    dh_next = w.w_recurrent.transpose() * dz;
    dc_next = dc;
  }
  grads.w_input.noalias() += d_pre.transpose() * input;
  grads.bias.row(0) += d_pre.colwise().sum();
  return d_pre * w.w_input;
}

Vec DocumentPass::head_input(int token_i, int token_j, const PairFeatures* features) const {
  const ModelConfig& cfg = params_.config;
  const int h = cfg.d_hid;
  if (token_i < 0 || token_j < 0 || token_i >= encoded_.size() || token_j >= encoded_.size()) {
    throw DataError("event token index outside the encoded document");
  }
  Vec z(cfg.head_input_dim());
  z.segment(0, h) = encoded_.forward.row(token_i).transpose();
  z.segment(h, h) = encoded_.backward.row(token_i).transpose();
  z.segment(2 * h, h) = encoded_.forward.row(token_j).transpose();
  z.segment(3 * h, h) = encoded_.backward.row(token_j).transpose();
  if (cfg.use_features) {
    if (!features) throw ConfigError("model uses pair features but none were supplied");
    z.tail(cfg.feature_dim()) = encode_features(*features);
  }
  return z;
}

Vec DocumentPass::score(int token_i, int token_j, Head head, const PairFeatures* features) const {
  const Vec z = head_input(token_i, token_j, features);
  if (head == Head::kCausal) {
    if (!params_.config.causal_head) throw ConfigError("causal head requested but the model has none");
    return params_.causal_weight * z + params_.causal_bias.row(0).transpose();
  }
  return params_.temporal_weight * z + params_.temporal_bias.row(0).transpose();
}

void DocumentPass::backprop_score(int token_i, int token_j, Head head, const PairFeatures* features,
                                  const Vec& d_scores, ModelParams& grads) {
  const Vec z = head_input(token_i, token_j, features);
  const Mat* weight = &params_.temporal_weight;
  if (head == Head::kCausal) {
    if (!params_.config.causal_head) throw ConfigError("causal head requested but the model has none");
    weight = &params_.causal_weight;
    grads.causal_weight.noalias() += d_scores * z.transpose();
    grads.causal_bias.row(0) += d_scores.transpose();
  } else {
    grads.temporal_weight.noalias() += d_scores * z.transpose();
    grads.temporal_bias.row(0) += d_scores.transpose();
  }
  const int h = params_.config.d_hid;
  const Vec dz = weight->transpose() * d_scores;
  d_output_.row(token_i).head(h) += dz.segment(0, h).transpose();
  d_output_.row(token_i).tail(h) += dz.segment(h, h).transpose();
  d_output_.row(token_j).head(h) += dz.segment(2 * h, h).transpose();
  d_output_.row(token_j).tail(h) += dz.segment(3 * h, h).transpose();
}

void DocumentPass::backward(ModelParams& grads) {
  const ModelConfig& cfg = params_.config;
  const int h = cfg.d_hid;
  Mat d_out = d_output_;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerCache& cache = layers_[l];
    if (cache.dropout_mask.size() > 0) d_out = d_out.cwiseProduct(cache.dropout_mask);
    Mat d_fwd = d_out.leftCols(h);
    Mat d_bwd = d_out.rightCols(h);
    Mat d_input = backprop_direction(params_.lstm[l][0], cache.input, false, cache.dir[0], d_fwd, grads.lstm[l][0]);
    d_input += backprop_direction(params_.lstm[l][1], cache.input, true, cache.dir[1], d_bwd, grads.lstm[l][1]);
    d_out = std::move(d_input);
  }
  // d_out is now d loss / d projected tokens.
  grads.proj_weight.noalias() += d_out.transpose() * token_concat_;
  grads.proj_bias.row(0) += d_out.colwise().sum();
  const Mat d_concat = d_out * params_.proj_weight;
  d_word_ = d_concat.leftCols(cfg.d_word);
  for (std::size_t t = 0; t < pos_tags_.size(); ++t) {
    grads.pos_embedding.row(pos_tags_[t]) += d_concat.row(static_cast<Eigen::Index>(t)).tail(cfg.d_pos);
  }
  d_output_.setZero();
}

// ---------------------------------------------------------------------------

Mat embed_tokens(const Document& doc, const EmbeddingSource& embeddings, const ModelParams& params) {
  const Mat words = embeddings.word_vectors(doc);
  DocumentPass pass(params, words, doc.pos_tags);
  return pass.token_inputs();
}

EncodedDocument encode_context(const Mat& word_vectors, std::span<const int> pos_tags, const ModelParams& params) {
  DocumentPass pass(params, word_vectors, pos_tags);
  return pass.encoded();
}

Vec score_pair(const DocumentPass& pass, const Document& doc, EventPair pair, Head head, const ModelParams& params) {
  const PairFeatures f = pair_features(doc, pair);
  return pass.score(doc.events.at(static_cast<std::size_t>(pair.first)).token,
                    doc.events.at(static_cast<std::size_t>(pair.second)).token, head,
                    params.config.use_features ? &f : nullptr);
}

ScoreTable score_instance(const Instance& instance, const DocumentPass& pass, const ModelParams& params) {
  const Document& doc = *instance.doc;
  ScoreTable table;
  table.doc_id = doc.id;
  table.pairs = instance.pairs;
  table.scores = Mat(static_cast<Eigen::Index>(instance.pairs.size()), params.config.num_labels);
  for (std::size_t p = 0; p < instance.pairs.size(); ++p) {
    table.scores.row(static_cast<Eigen::Index>(p)) =
        score_pair(pass, doc, instance.pairs[p], Head::kTemporal, params).transpose();
  }
  table.causal_pairs = instance.causal_pairs;
  table.causal_scores = Mat(static_cast<Eigen::Index>(instance.causal_pairs.size()), kNumCausalLabels);
  if (!instance.causal_pairs.empty() && !params.config.causal_head) {
    throw ConfigError("instance has causal pairs but the model has no causal head");
  }
  for (std::size_t p = 0; p < instance.causal_pairs.size(); ++p) {
    table.causal_scores.row(static_cast<Eigen::Index>(p)) =
        score_pair(pass, doc, instance.causal_pairs[p], Head::kCausal, params).transpose();
  }
  return table;
}

ScoreTable score_instance(const Instance& instance, const ModelParams& params, const EmbeddingSource& embeddings) {
  if (instance.pairs.empty()) throw DataError("instance for document '" + instance.doc->id + "' has no candidate pairs");
  const Mat words = embeddings.word_vectors(*instance.doc);
  DocumentPass pass(params, words, instance.doc->pos_tags);
  return score_instance(instance, pass, params);
}

Vec log_softmax(const Vec& scores) {
  const double m = scores.maxCoeff();
  const double lse = m + std::log((scores.array() - m).exp().sum());
  return scores.array() - lse;
}

Vec softmax(const Vec& scores) { return log_softmax(scores).array().exp(); }

}  // namespace tempssvm
