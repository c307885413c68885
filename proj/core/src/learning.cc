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

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "tempssvm/error.h"

namespace tempssvm {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x9e3779b97f4a7c15ULL));
}

const PairFeatures* features_for(const ModelParams& params, const Document& doc, EventPair pair, PairFeatures& buf) {
  if (!params.config.use_features) return nullptr;
  buf = pair_features(doc, pair);
  return &buf;
}

int token_of(const Document& doc, int event) { return doc.events.at(static_cast<std::size_t>(event)).token; }

LabelSet resolve_exclude(const std::vector<std::string>& names, const LabelScheme& scheme) {
  LabelSet out;
  for (const auto& n : names) out.insert(scheme.label(n));
  return out;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Adam state over the same tensor layout as the parameters.
class Adam {
 public:
  Adam(const ModelParams& params, const TrainConfig& config)
      : m_(ModelParams::zeros_like(params)), v_(ModelParams::zeros_like(params)), config_(config) {}

  void step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k]->array() = b1 * m[k]->array() + (1.0 - b1) * g[k]->array();
      v[k]->array() = b2 * v[k]->array() + (1.0 - b2) * g[k]->array().square();
      p[k]->array() -= config_.local_lr * (m[k]->array() / c1) / ((v[k]->array() / c2).sqrt() + config_.adam_eps);
    }
  }

 private:
  ModelParams m_;
  ModelParams v_;
  const TrainConfig& config_;
  int t_ = 0;
};

double evaluate_dev(const Dataset& dev, const ModelParams& params, const LabelScheme& scheme,
                    const TrainConfig& config, bool global, EpochRecord& rec) {
  DecodeOptions opts;
  opts.global = global;
  opts.constraints = config.constraints;
  opts.direction = Direction::kForward;
  const DecodedSplit decoded = decode_dataset(dev, params, scheme, opts, config.jobs);
  rec.dev = micro_average(decoded.predicted, decoded.gold, resolve_exclude(config.exclude, scheme));
  rec.dev_violations = decoded.violations;
  return rec.dev.f1;
}

}  // namespace

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  model.validate();
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (window < 0) fail("window must be >= 0");
  if (!(local_lr >= 0.0) || !(global_lr >= 0.0)) fail("learning rates must be >= 0");
  if (local_epochs < 0 || global_epochs < 0) fail("epoch counts must be >= 0");
  if (batch_docs < 1) fail("batch_docs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    fail("Adam parameters out of range");
  }
  if (!(global_decay > 0.0 && global_decay <= 1.0)) fail("global decay must lie in (0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(c >= 0.0)) fail("C must be >= 0");
  if (patience < 1) fail("patience must be >= 1");
  if (seeds.empty()) fail("at least one seed is required");
  if (jobs < 1) fail("jobs must be >= 1");
}

TrainConfig preset_config(std::string_view name) {
  TrainConfig c;
  c.preset = std::string(name);
  if (name == "tbdense") {
    c.model.d_hid = 60;
    c.model.dropout = 0.5;
    c.model.layers = 1;
    c.local_lr = 0.002;
    c.global_lr = 0.05;
    c.global_decay = 0.7;
  } else if (name == "matres") {
    c.model.d_hid = 40;
    c.model.dropout = 0.7;
    c.model.layers = 2;
    c.local_lr = 0.002;
    c.global_lr = 0.08;
    c.global_decay = 0.7;
    c.exclude = {"VAGUE"};
  } else if (name == "tcr") {
    c.model.d_hid = 30;
    c.model.dropout = 0.5;
    c.model.layers = 1;
    c.local_lr = 0.002;
    c.global_lr = 0.08;
    c.global_decay = 0.9;
    c.exclude = {"VAGUE"};
    c.constraints.causal = true;
  } else if (name == "synthetic") {
    c.model.d_hid = 24;
    c.model.d_in = 24;
    c.model.dropout = 0.1;
    c.model.layers = 1;
    c.local_lr = 0.01;
    c.local_epochs = 30;
    c.batch_docs = 2;
    c.global_lr = 0.02;
    c.global_decay = 0.8;
    c.global_epochs = 8;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: tbdense, matres, tcr, synthetic)");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"tbdense", "matres", "tcr", "synthetic"}; }

ModelConfig model_config_for(const TrainConfig& config, const LabelScheme& scheme, const EmbeddingSource& embeddings,
                             std::uint64_t seed) {
  ModelConfig m = config.model;
  m.scheme = scheme.name();
  m.num_labels = scheme.size();
  m.d_word = embeddings.dim();
  m.causal_head = scheme.has_causal();
  m.seed = seed;
  return m;
}

Dataset make_dataset(const std::vector<Document>& docs, const EmbeddingSource& embeddings, int window) {
  Dataset out;
  for (const auto& d : docs) {
    auto doc = std::make_shared<const Document>(d);
    Instance inst = make_instance(doc, window);
    if (inst.pairs.empty()) {
      spdlog::debug("document {} has no candidate pairs; skipped", d.id);
      continue;
    }
    out.words.push_back(embeddings.word_vectors(*doc));
    out.docs.push_back(doc);
    out.forward.push_back(std::move(inst));
  }
  return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  const int threads = std::min(jobs, n);
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------

Assignment decode_instance(const Instance& forward, const Mat& words, const ModelParams& params,
                           const LabelScheme& scheme, const DecodeOptions& options, ScoreTable* scores_out) {
  const Instance target = with_direction(forward, options.direction, scheme);
  const bool joint = options.global && options.constraints.symmetry && options.direction != Direction::kBoth;
  const Instance solved = joint ? augment_flipped(forward, scheme) : target;

  DocumentPass pass(params, words, forward.doc->pos_tags);
  const ScoreTable table = score_instance(solved, pass, params);
  Assignment full = options.global
                        ? map_inference(table, ConstraintSet::build(table.pairs, table.causal_pairs, scheme,
                                                                    options.constraints),
                                        options.solve)
                        : local_decode(table);
  if (!joint) {
    if (scores_out) *scores_out = table;
    return full;
  }

  std::map<EventPair, int> row;
  for (std::size_t p = 0; p < table.pairs.size(); ++p) row[table.pairs[p]] = static_cast<int>(p);
  std::map<EventPair, int> causal_row;
  for (std::size_t q = 0; q < table.causal_pairs.size(); ++q) causal_row[table.causal_pairs[q]] = static_cast<int>(q);

  Assignment out;
  out.objective = full.objective;
  ScoreTable projected;
  projected.doc_id = table.doc_id;
  projected.scores = Mat(static_cast<Eigen::Index>(target.pairs.size()), table.scores.cols());
  projected.causal_scores = Mat(static_cast<Eigen::Index>(target.causal_pairs.size()), kNumCausalLabels);
  for (const auto& p : target.pairs) {
    const int r = row.at(p);
    projected.scores.row(static_cast<Eigen::Index>(out.pairs.size())) = table.scores.row(r);
    out.pairs.push_back(p);
    out.labels.push_back(full.labels[static_cast<std::size_t>(r)]);
  }
  for (const auto& p : target.causal_pairs) {
    const int r = causal_row.at(p);
    projected.causal_scores.row(static_cast<Eigen::Index>(out.causal_pairs.size())) = table.causal_scores.row(r);
    out.causal_pairs.push_back(p);
    out.causal.push_back(full.causal[static_cast<std::size_t>(r)]);
  }
  projected.pairs = out.pairs;
  projected.causal_pairs = out.causal_pairs;
  if (scores_out) *scores_out = std::move(projected);
  return out;
}

DecodedSplit decode_dataset(const Dataset& data, const ModelParams& params, const LabelScheme& scheme,
                            const DecodeOptions& options, int jobs) {
  const int n = static_cast<int>(data.size());
  DecodedSplit out;
  out.predicted.resize(static_cast<std::size_t>(n));
  out.gold.resize(static_cast<std::size_t>(n));
  out.scores.resize(static_cast<std::size_t>(n));
  std::vector<long> violations(static_cast<std::size_t>(n), 0);
  ConstraintFlags check{true, true, options.constraints.causal};
  parallel_for(n, jobs, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    const Instance& fwd = data.forward[k];
    out.predicted[k] = decode_instance(fwd, data.words[k], params, scheme, options, &out.scores[k]);
    if (fwd.labeled()) out.gold[k] = with_direction(fwd, options.direction, scheme).gold_assignment();
    violations[k] = static_cast<long>(validate_graph(out.predicted[k], scheme, check).size());
  });
  for (long v : violations) {
    out.violations += v;
    if (v > 0) ++out.docs_with_violations;
  }
  return out;
}

// ---------------------------------------------------------------------------

int hamming(const Assignment& a, const Assignment& b) {
  if (a.pairs != b.pairs || a.causal_pairs != b.causal_pairs || a.labels.size() != b.labels.size() ||
      a.causal.size() != b.causal.size()) {
    throw DataError("hamming distance needs assignments over the same pairs");
  }
  int d = 0;
  for (std::size_t p = 0; p < a.labels.size(); ++p) d += a.labels[p] != b.labels[p];
  for (std::size_t q = 0; q < a.causal.size(); ++q) d += a.causal[q] != b.causal[q];
  return d;
}

double ssvm_instance_loss(const ScoreTable& scores, const Assignment& gold, const Assignment& yhat, int m) {
  if (m <= 0) throw DataError("instance has no pairs");
  const double delta = hamming(gold, yhat);
  const double gap = assignment_score(scores, yhat) - assignment_score(scores, gold);
  return std::max(0.0, delta + gap) / m;
}

double local_loss(const Instance& instance, const Mat& words, const ModelParams& params, Rng* dropout_rng,
                  ModelParams* grads, double scale) {
  if (!instance.labeled()) throw DataError("document '" + instance.doc->id + "' carries no gold relations");
  const Document& doc = *instance.doc;
  DocumentPass pass(params, words, doc.pos_tags, dropout_rng);
  double total = 0.0;
  PairFeatures buf;
  auto one = [&](EventPair pair, Head head, int gold) {
    const PairFeatures* f = features_for(params, doc, pair, buf);
    const int ti = token_of(doc, pair.first), tj = token_of(doc, pair.second);
    const Vec s = pass.score(ti, tj, head, f);
    const Vec lp = log_softmax(s);
    total -= lp[gold];
    if (grads) {
      Vec d = lp.array().exp();
      d[gold] -= 1.0;
      pass.backprop_score(ti, tj, head, f, d * scale, *grads);
    }
  };
  for (std::size_t p = 0; p < instance.pairs.size(); ++p) one(instance.pairs[p], Head::kTemporal, instance.gold[p].index);
  for (std::size_t q = 0; q < instance.causal_pairs.size(); ++q) {
    one(instance.causal_pairs[q], Head::kCausal, static_cast<int>(instance.causal_gold[q]));
  }
  if (grads) pass.backward(*grads);
  return total * scale;
}

HingeResult hinge_loss(const Instance& instance, const Mat& words, const ModelParams& params,
                       const LabelScheme& scheme, const ConstraintSet& constraints, bool augmented, Rng* dropout_rng,
                       ModelParams* grads, const Assignment* pinned) {
  (void)scheme;
  if (!instance.labeled()) throw DataError("document '" + instance.doc->id + "' carries no gold relations");
  const Document& doc = *instance.doc;
  DocumentPass pass(params, words, doc.pos_tags, dropout_rng);
  const ScoreTable table = score_instance(instance, pass, params);
  const Assignment gold = instance.gold_assignment();
  HingeResult r;
  if (pinned) {
    r.yhat = *pinned;
  } else {
    r.yhat = augmented ? loss_augmented_inference(table, gold, constraints) : map_inference(table, constraints);
  }
  const int m = instance.size();
  r.hamming = hamming(gold, r.yhat);
  r.score_gap = assignment_score(table, r.yhat) - assignment_score(table, gold);
  r.loss = std::max(0.0, r.hamming + r.score_gap) / m;
  if (grads && r.hamming + r.score_gap > 0.0) {
    const double w = 1.0 / m;
    PairFeatures buf;
    for (std::size_t p = 0; p < instance.pairs.size(); ++p) {
      const int yh = r.yhat.labels[p].index, yg = gold.labels[p].index;
      if (yh == yg) continue;
      Vec d = Vec::Zero(table.scores.cols());
      d[yh] += w;
      d[yg] -= w;
      const EventPair pair = instance.pairs[p];
      pass.backprop_score(token_of(doc, pair.first), token_of(doc, pair.second), Head::kTemporal,
                          features_for(params, doc, pair, buf), d, *grads);
    }
    for (std::size_t q = 0; q < instance.causal_pairs.size(); ++q) {
      const int yh = static_cast<int>(r.yhat.causal[q]), yg = static_cast<int>(gold.causal[q]);
      if (yh == yg) continue;
      Vec d = Vec::Zero(kNumCausalLabels);
      d[yh] += w;
      d[yg] -= w;
      const EventPair pair = instance.causal_pairs[q];
      pass.backprop_score(token_of(doc, pair.first), token_of(doc, pair.second), Head::kCausal,
                          features_for(params, doc, pair, buf), d, *grads);
    }
    pass.backward(*grads);
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string EpochRecord::to_json() const {
  nlohmann::json j = {{"stage", stage},
                      {"seed", seed},
                      {"epoch", epoch},
                      {"train_loss", train_loss},
                      {"lr", lr},
                      {"dev_precision", dev.precision},
                      {"dev_recall", dev.recall},
                      {"dev_f1", dev.f1},
                      {"violations", dev_violations},
                      {"selected", selected}};
  if (stage == "global") {
    j["hinge_active"] = hinge_active;
    j["skipped"] = skipped;
  }
  return j.dump();
}

TrainResult train_local(const Dataset& train, const Dataset& dev, const LabelScheme& scheme,
                        const TrainConfig& config, std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  if (train.size() == 0) throw DataError("training corpus has no usable documents");
  ModelConfig mc = config.model;
  mc.scheme = scheme.name();
  mc.num_labels = scheme.size();
  mc.d_word = static_cast<int>(train.words.front().cols());
  mc.causal_head = scheme.has_causal();
  mc.seed = seed;
  ModelParams params = ModelParams::init(mc);
  Adam adam(params, config);

  std::vector<Instance> instances;
  for (const auto& f : train.forward) instances.push_back(with_direction(f, config.direction, scheme));
  const Dataset& select_on = dev.size() > 0 ? dev : train;

  TrainResult result{params, -1, -1.0, {}};
  std::vector<int> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng shuffle_rng(stream_seed(seed, 0x10ca1));

  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    Timer timer;
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    long epoch_pairs = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_docs)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_docs));
      const int count = static_cast<int>(end - start);
      long pairs = 0;
      for (std::size_t k = start; k < end; ++k) pairs += instances[static_cast<std::size_t>(order[k])].size();
      const double scale = 1.0 / static_cast<double>(pairs);
      std::vector<ModelParams> doc_grads(static_cast<std::size_t>(count));
      std::vector<double> doc_loss(static_cast<std::size_t>(count), 0.0);
      parallel_for(count, config.jobs, [&](int b) {
        const int idx = order[start + static_cast<std::size_t>(b)];
        Rng dropout(stream_seed(seed, static_cast<std::uint64_t>(epoch) + 1, static_cast<std::uint64_t>(idx)));
        doc_grads[static_cast<std::size_t>(b)] = ModelParams::zeros_like(params);
        doc_loss[static_cast<std::size_t>(b)] =
            local_loss(instances[static_cast<std::size_t>(idx)], train.words[static_cast<std::size_t>(idx)], params,
                       &dropout, &doc_grads[static_cast<std::size_t>(b)], scale);
      });
      ModelParams grads = ModelParams::zeros_like(params);
      double batch_loss = 0.0;
      for (int b = 0; b < count; ++b) {
        grads.add_scaled(doc_grads[static_cast<std::size_t>(b)], 1.0);
        batch_loss += doc_loss[static_cast<std::size_t>(b)];
      }
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        throw InvariantError("non-finite cross-entropy in stage one (seed " + std::to_string(seed) + ", epoch " +
                             std::to_string(epoch) + ", batch starting with document '" +
                             instances[static_cast<std::size_t>(order[start])].doc->id + "')");
      }
      epoch_loss += batch_loss / scale;
      epoch_pairs += pairs;
      adam.step(params, grads);
    }
    EpochRecord rec;
    rec.stage = "local";
    rec.seed = seed;
    rec.epoch = epoch;
    rec.lr = config.local_lr;
    rec.train_loss = epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0;
    const double f1 = evaluate_dev(select_on, params, scheme, config, false, rec);
    if (f1 > result.best_dev_f1) {
      result.best_dev_f1 = f1;
      result.best_epoch = epoch;
      result.params = params;
      rec.selected = true;
    }
    rec.seconds = timer.seconds();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (result.best_epoch < 0) {
    // No epochs ran: report the initial parameters on the dev split.
    EpochRecord rec;
    result.best_dev_f1 = evaluate_dev(select_on, params, scheme, config, false, rec);
    result.params = params;
  }
  return result;
}

TrainResult train_global(const Dataset& train, const Dataset& dev, const LabelScheme& scheme,
                         const TrainConfig& config, const ModelParams& start, std::uint64_t seed,
                         const EpochCallback& on_epoch) {
  config.validate();
  if (train.size() == 0) throw DataError("training corpus has no usable documents");
  ModelParams params = start;
  ModelParams velocity = ModelParams::zeros_like(params);

  std::vector<Instance> instances;
  std::vector<ConstraintSet> constraints;
  for (const auto& f : train.forward) {
    instances.push_back(with_direction(f, config.direction, scheme));
    constraints.push_back(
        ConstraintSet::build(instances.back().pairs, instances.back().causal_pairs, scheme, config.constraints));
  }
  const Dataset& select_on = dev.size() > 0 ? dev : train;

  TrainResult result{params, -1, 0.0, {}};
  {
    EpochRecord rec;
    result.best_dev_f1 = evaluate_dev(select_on, params, scheme, config, true, rec);
  }
  std::vector<int> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng shuffle_rng(stream_seed(seed, 0x910ba1));
  int since_best = 0;

  for (int epoch = 0; epoch < config.global_epochs; ++epoch) {
    Timer timer;
    shuffle_rng.shuffle(order);
    const double lr = config.global_lr * std::pow(config.global_decay, epoch);
    EpochRecord rec;
    rec.stage = "global";
    rec.seed = seed;
    rec.epoch = epoch;
    rec.lr = lr;
    double total = 0.0;
    for (int idx : order) {
      const auto k = static_cast<std::size_t>(idx);
      ModelParams grads = ModelParams::zeros_like(params);
      Rng dropout(stream_seed(seed, 0x5000 + static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx)));
      HingeResult h;
      try {
        h = hinge_loss(instances[k], train.words[k], params, scheme, constraints[k], config.augmented, &dropout,
                       &grads);
      } catch (const SolverError& e) {
        spdlog::warn("stage two: inference failed on document '{}': {}", instances[k].doc->id, e.what());
        ++rec.skipped;
        continue;
      }
      if (!std::isfinite(h.loss) || !grads.all_finite()) {
        throw InvariantError("non-finite hinge in stage two (seed " + std::to_string(seed) + ", epoch " +
                             std::to_string(epoch) + ", document '" + instances[k].doc->id + "')");
      }
      total += h.loss;
      if (h.loss > 0.0) ++rec.hinge_active;
      if (config.c > 0.0) grads.add_scaled(params, 2.0 * config.c);
      auto v = velocity.tensors();
      auto g = grads.tensors();
      auto p = params.tensors();
      for (std::size_t t = 0; t < p.size(); ++t) {
        *v[t] = config.momentum * *v[t] + *g[t];
        *p[t] -= lr * *v[t];
      }
    }
    rec.train_loss = instances.empty() ? 0.0 : total / static_cast<double>(instances.size());
    const double f1 = evaluate_dev(select_on, params, scheme, config, true, rec);
    if (f1 > result.best_dev_f1) {
      result.best_dev_f1 = f1;
      result.best_epoch = epoch;
      result.params = params;
      rec.selected = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    rec.seconds = timer.seconds();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (config.early_stopping && since_best >= config.patience) break;
  }
  return result;
}

}  // namespace tempssvm
