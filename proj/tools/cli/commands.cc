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

#include "commands.h"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <sstream>

#include "run_config.h"
#include "tempssvm/checkpoint.h"
#include "tempssvm/corpus.h"
#include "tempssvm/error.h"
#include "tempssvm/inference.h"
#include "tempssvm/learning.h"
#include "tempssvm/metrics.h"

namespace tempssvm::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig config;
  int jobs = 1;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

std::string fixed4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

std::vector<const Document*> doc_pointers(const Dataset& d) {
  std::vector<const Document*> out;
  for (const auto& p : d.docs) out.push_back(p.get());
  return out;
}

LabelSet exclude_set(const std::vector<std::string>& names, const LabelScheme& scheme) {
  LabelSet s;
  for (const auto& n : names) s.insert(scheme.label(n));
  return s;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

// Output stream that is either a file or `fallback` for "-".
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-" || path.empty()) {
      stream_ = &fallback;
      return;
    }
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    file_.open(path, std::ios::binary);
    if (!file_) throw DataError("cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

Dataset load_split(const std::string& path, const LabelScheme& scheme,
                   const EmbeddingSource& embeddings, int window) {
  const auto docs = load_corpus(path, scheme);
  return make_dataset(docs, embeddings, window);
}

EmbeddingSource embeddings_for_checkpoint(const RunConfig& cfg, const ModelParams& params) {
  EmbeddingSource emb = cfg.has("embeddings") ? cfg.embeddings()
                        : cfg.get_bool("hashed", false)
                            ? EmbeddingSource::hashed(params.config.d_word)
                            : cfg.embeddings();  // throws the usual message
  if (emb.dim() != params.config.d_word) {
    throw ConfigError("word vectors have dimension " + std::to_string(emb.dim()) + " but the checkpoint expects " +
                      std::to_string(params.config.d_word));
  }
  return emb;
}

void check_causal_support(const ConstraintFlags& flags, const LabelScheme& scheme) {
  if (flags.causal && !scheme.has_causal()) {
    throw ConfigError("the causal constraint needs a scheme with causal labels; '" + scheme.name() +
                      "' declares none");
  }
}

std::string pair_ids(const Document& doc, EventPair p) {
  return doc.events.at(static_cast<std::size_t>(p.first)).id + "," + doc.events.at(static_cast<std::size_t>(p.second)).id;
}

std::string describe(const Violation& v, const Document& doc) {
  std::string s(to_string(v.kind));
  s += " [";
  for (std::size_t k = 0; k < v.pairs.size(); ++k) {
    if (k) s += " ";
    s += "(" + pair_ids(doc, v.pairs[k]) + ")";
  }
  s += "] " + v.message;
  return s;
}

// Reorders `pred` to the pair order of `gold` when both cover the same pairs.
Assignment align_to(const Assignment& pred, const Assignment& gold) {
  std::map<EventPair, Label> labels;
  for (std::size_t k = 0; k < pred.pairs.size(); ++k) labels[pred.pairs[k]] = pred.labels[k];
  std::map<EventPair, CausalLabel> causal;
  for (std::size_t k = 0; k < pred.causal_pairs.size(); ++k) causal[pred.causal_pairs[k]] = pred.causal[k];
  if (labels.size() != gold.pairs.size() || causal.size() != gold.causal_pairs.size()) return pred;
  Assignment out;
  out.objective = pred.objective;
  for (const auto& p : gold.pairs) {
    auto it = labels.find(p);
    if (it == labels.end()) return pred;
    out.pairs.push_back(p);
    out.labels.push_back(it->second);
  }
  for (const auto& p : gold.causal_pairs) {
    auto it = causal.find(p);
    if (it == causal.end()) return pred;
    out.causal_pairs.push_back(p);
    out.causal.push_back(it->second);
  }
  return out;
}

bool same_pair_set(const Assignment& a, const Assignment& b) {
  auto sorted = [](std::vector<EventPair> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  return sorted(a.pairs) == sorted(b.pairs) && sorted(a.causal_pairs) == sorted(b.causal_pairs);
}

// Gold over every annotated relation of a document, in file order.
Assignment full_gold(const Document& doc) {
  Assignment a;
  for (const auto& r : doc.relations) {
    a.pairs.push_back({r.source, r.target});
    a.labels.push_back(r.label);
  }
  for (const auto& c : doc.causal_relations) {
    a.causal_pairs.push_back({c.source, c.target});
    a.causal.push_back(c.label);
  }
  return a;
}

std::vector<ScoreFileEntry> read_predictions(const std::string& path, const std::vector<Document>& docs,
                                             const LabelScheme& scheme) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read prediction file " + path);
  auto entries = read_score_tables(in, docs, scheme, path);
  for (const auto& e : entries) {
    if (!e.chosen) throw DataError(path + ": document " + e.table.doc_id + " has no chosen-label column");
  }
  return entries;
}

std::string run_info_json(const TrainConfig& tc, const std::string& stage, std::uint64_t seed,
                          const TrainResult& r, const RunConfig& cfg) {
  json j = {{"stage", stage},
            {"seed", seed},
            {"preset", tc.preset},
            {"window", tc.window},
            {"direction", std::string(to_string(tc.direction))},
            {"exclude", tc.exclude},
            {"best_epoch", r.best_epoch},
            {"best_dev_f1", r.best_dev_f1},
            {"symmetry", tc.constraints.symmetry},
            {"transitivity", tc.constraints.transitivity},
            {"causal", tc.constraints.causal}};
  json settings = json::object();
  for (const auto& [k, v] : cfg.values()) settings[k] = v;
  j["config"] = settings;
  return j.dump();
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string stage = "both";
  std::string init;
};

int cmd_train(Context& ctx, const TrainArgs& a) {
  const RunConfig& cfg = ctx.config;
  if (a.stage != "local" && a.stage != "global" && a.stage != "both") {
    throw ConfigError("--stage must be local, global or both");
  }
  if (a.stage == "global" && a.init.empty()) throw ConfigError("--stage global needs --init <stage-one checkpoint>");
  if (a.stage != "global" && !a.init.empty()) throw ConfigError("--init only applies to --stage global");
  cfg.check_paths({"scheme", "train", "dev", "test", "embeddings"});
  if (!a.init.empty() && !fs::exists(a.init)) throw ConfigError("--init checkpoint does not exist: " + a.init);
  const std::string train_path = cfg.require("train");
  const std::string dev_path = cfg.require("dev");
  const auto test_path = cfg.get("test");
  const LabelScheme scheme = cfg.scheme();
  const EmbeddingSource embeddings = cfg.embeddings();
  TrainConfig tc = cfg.train_config();
  tc.jobs = ctx.jobs;
  tc.validate();
  check_causal_support(tc.constraints, scheme);
  exclude_set(tc.exclude, scheme);  // unknown labels fail before any compute
  std::optional<Checkpoint> init;
  if (!a.init.empty()) init = load_checkpoint(a.init, scheme);

  const fs::path out_dir = cfg.get_or("output", "runs");
  fs::create_directories(out_dir);
  const Dataset train = load_split(train_path, scheme, embeddings, tc.window);
  const Dataset dev = load_split(dev_path, scheme, embeddings, tc.window);
  std::optional<Dataset> test;
  if (test_path && !test_path->empty()) test = load_split(*test_path, scheme, embeddings, tc.window);
  spdlog::info("train {} docs, dev {} docs{}", train.size(), dev.size(),
               test ? ", test " + std::to_string(test->size()) + " docs" : std::string());

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary);
  if (!metrics) throw DataError("cannot write " + (out_dir / "metrics.jsonl").string());
  auto log_epoch = [&](const EpochRecord& r) {
    metrics << r.to_json() << "\n";
    metrics.flush();
    spdlog::info("[{} seed {} epoch {}] loss {:.5f} dev F1 {:.4f}{} ({:.1f}s)", r.stage, r.seed, r.epoch, r.train_loss,
                 r.dev.f1, r.selected ? " *" : "", r.seconds);
  };

  const LabelSet exclude = exclude_set(tc.exclude, scheme);
  auto score_split = [&](const Dataset& d, const ModelParams& p, bool global) {
    DecodeOptions o;
    o.global = global;
    o.constraints = tc.constraints;
    const DecodedSplit s = decode_dataset(d, p, scheme, o, ctx.jobs);
    return micro_average(s.predicted, s.gold, exclude);
  };

  struct Row {
    std::uint64_t seed;
    std::string stage;
    double dev_f1;
    std::optional<double> test_f1;
  };
  std::vector<Row> rows;
  for (std::uint64_t seed : tc.seeds) {
    const fs::path seed_dir = out_dir / ("seed" + std::to_string(seed));
    fs::create_directories(seed_dir);
    ModelParams start;
    auto record = [&](const std::string& stage, const ModelParams& p, bool global) {
      Row row{seed, stage, score_split(dev, p, global).f1, std::nullopt};
      if (test) row.test_f1 = score_split(*test, p, global).f1;
      json s = {{"seed", seed}, {"stage", stage}, {"dev_f1", row.dev_f1}};
      if (row.test_f1) s["test_f1"] = *row.test_f1;
      metrics << json{{"summary", s}}.dump() << "\n";
      rows.push_back(row);
    };
    if (a.stage != "global") {
      TrainResult r = train_local(train, dev, scheme, tc, seed, log_epoch);
      save_checkpoint(seed_dir / "local.ckpt", r.params, run_info_json(tc, "local", seed, r, cfg));
      record("local", r.params, false);
      start = std::move(r.params);
    } else {
      start = init->params;
      if (start.config.d_word != embeddings.dim()) {
        throw ConfigError("--init checkpoint expects word vectors of dimension " +
                          std::to_string(start.config.d_word));
      }
    }
    if (a.stage != "local") {
      TrainResult r = train_global(train, dev, scheme, tc, start, seed, log_epoch);
      save_checkpoint(seed_dir / "global.ckpt", r.params, run_info_json(tc, "global", seed, r, cfg));
      record("global", r.params, true);
    }
  }

  std::ostream& out = *ctx.out;
  out << "seed    stage   dev_f1  " << (test ? "test_f1" : "") << "\n";
  json summary = {{"runs", json::array()}, {"mean", json::object()}};
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << r.seed << std::setw(8) << r.stage << fixed4(r.dev_f1)
        << (r.test_f1 ? "  " + fixed4(*r.test_f1) : "") << "\n";
    json j = {{"seed", r.seed}, {"stage", r.stage}, {"dev_f1", r.dev_f1}};
    if (r.test_f1) j["test_f1"] = *r.test_f1;
    summary["runs"].push_back(j);
  }
  for (const std::string stage : {"local", "global"}) {
    double dev_sum = 0, test_sum = 0;
    int n = 0;
    for (const auto& r : rows) {
      if (r.stage != stage) continue;
      dev_sum += r.dev_f1;
      test_sum += r.test_f1.value_or(0.0);
      ++n;
    }
    if (n == 0) continue;
    out << std::left << std::setw(8) << "mean" << std::setw(8) << stage << fixed4(dev_sum / n)
        << (test ? "  " + fixed4(test_sum / n) : "") << "\n";
    json m = {{"dev_f1", dev_sum / n}, {"seeds", n}};
    if (test) m["test_f1"] = test_sum / n;
    summary["mean"][stage] = m;
    metrics << json{{"summary", {{"seed", "mean"}, {"stage", stage}, {"dev_f1", dev_sum / n}}}}.dump() << "\n";
  }
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out = "-";
  std::string decode = "global";
  bool no_symmetry = false;
  bool no_transitivity = false;
  bool causal = false;
  std::string direction = "forward";
};

int cmd_predict(Context& ctx, const PredictArgs& a) {
  const RunConfig& cfg = ctx.config;
  if (a.decode != "local" && a.decode != "global") throw ConfigError("--decode must be local or global");
  const bool global = a.decode == "global";
  if (!global && (a.no_symmetry || a.no_transitivity || a.causal)) {
    throw ConfigError("--no-symmetry, --no-transitivity and --causal only apply to --decode global");
  }
  const std::string corpus = a.corpus.empty() ? cfg.require("test") : a.corpus;
  if (!fs::exists(corpus)) throw ConfigError("corpus does not exist: " + corpus);
  if (!fs::exists(a.checkpoint)) throw ConfigError("checkpoint does not exist: " + a.checkpoint);
  cfg.check_paths({"scheme", "embeddings"});
  const LabelScheme scheme = cfg.scheme();
  DecodeOptions opts;
  opts.global = global;
  opts.direction = parse_direction(a.direction);
  opts.constraints = {!a.no_symmetry, !a.no_transitivity, a.causal};
  check_causal_support(opts.constraints, scheme);

  const Checkpoint ckpt = load_checkpoint(a.checkpoint, scheme);
  const EmbeddingSource embeddings = embeddings_for_checkpoint(cfg, ckpt.params);
  const Dataset data = load_split(corpus, scheme, embeddings, cfg.get_int("window", 1));
  const DecodedSplit decoded = decode_dataset(data, ckpt.params, scheme, opts, ctx.jobs);

  // Global output is checked against the constraints it was decoded under;
  // local output against symmetry and transitivity (and causal coupling
  // when the scheme has causal labels).
  const ConstraintFlags check = global ? opts.constraints : ConstraintFlags{true, true, scheme.has_causal()};
  long violations = 0, bad_docs = 0;
  std::string first;
  for (std::size_t k = 0; k < decoded.predicted.size(); ++k) {
    const auto v = validate_graph(decoded.predicted[k], scheme, check);
    violations += static_cast<long>(v.size());
    if (!v.empty()) {
      ++bad_docs;
      if (first.empty()) first = data.docs[k]->id + ": " + describe(v.front(), *data.docs[k]);
    }
  }
  if (global && violations > 0) {
    throw InvariantError("global decoding produced " + std::to_string(violations) + " constraint violations; first: " +
                         first);
  }
  {
    OutputTarget target(a.out, *ctx.out);
    write_score_tables(target.stream(), decoded.scores, doc_pointers(data), scheme, &decoded.predicted);
  }
  if (violations > 0) {
    *ctx.err << "warning: " << violations << " constraint violations in " << bad_docs << " of " << data.size()
             << " documents (first: " << first << ")\n";
  }
  spdlog::info("decoded {} documents ({} decode, {} pairs)", data.size(), a.decode, a.direction);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string pred;
  std::string gold;
  std::vector<std::string> exclude;
  bool exclude_set = false;
  std::string direction = "auto";
  std::string json_out;
};

int cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
  const RunConfig& cfg = ctx.config;
  const std::string gold_path = a.gold.empty() ? cfg.require("test") : a.gold;
  if (!fs::exists(gold_path)) throw ConfigError("gold corpus does not exist: " + gold_path);
  if (!fs::exists(a.pred)) throw ConfigError("prediction file does not exist: " + a.pred);
  if (a.direction != "auto") parse_direction(a.direction);
  const LabelScheme scheme = cfg.scheme();
  std::vector<std::string> exclude_names = a.exclude_set ? a.exclude : cfg.train_config().exclude;
  exclude_names.erase(std::remove(exclude_names.begin(), exclude_names.end(), "none"), exclude_names.end());
  const LabelSet exclude = exclude_set(exclude_names, scheme);

  const auto docs = load_corpus(gold_path, scheme);
  const auto entries = read_predictions(a.pred, docs, scheme);
  std::map<std::string, const ScoreFileEntry*> by_doc;
  for (const auto& e : entries) by_doc[e.table.doc_id] = &e;

  const int window = cfg.get_int("window", 1);
  std::vector<Assignment> pred, gold;
  std::vector<std::string> problems;
  std::string direction_used;
  for (const auto& d : docs) {
    auto shared = std::make_shared<const Document>(d);
    const Instance fwd = make_instance(shared, window);
    if (fwd.pairs.empty() && fwd.causal_pairs.empty()) continue;
    auto it = by_doc.find(d.id);
    if (it == by_doc.end()) {
      problems.push_back("document " + d.id + ": no predictions");
      continue;
    }
    const Assignment& p = *it->second->chosen;
    std::optional<Assignment> g;
    std::string chosen_dir = a.direction;
    if (a.direction == "auto") {
      for (const char* dir : {"forward", "both", "backward"}) {
        Assignment cand = with_direction(fwd, parse_direction(dir), scheme).gold_assignment();
        if (same_pair_set(p, cand)) {
          g = std::move(cand);
          chosen_dir = dir;
          break;
        }
      }
      if (!g) {
        chosen_dir = "forward";
        g = fwd.gold_assignment();
      }
    } else {
      g = with_direction(fwd, parse_direction(a.direction), scheme).gold_assignment();
    }
    if (!direction_used.empty() && direction_used != chosen_dir) {
      problems.push_back("document " + d.id + ": predictions cover " + chosen_dir + " pairs, earlier documents " +
                         direction_used);
    }
    if (direction_used.empty()) direction_used = chosen_dir;
    const Assignment aligned = align_to(p, *g);
    const auto diff = pair_domain_diff(aligned, *g);
    if (!diff.empty()) {
      problems.push_back("document " + d.id + ": pair domains differ");
      for (const auto& line : diff) problems.push_back("  " + line);
      continue;
    }
    pred.push_back(aligned);
    gold.push_back(*g);
    by_doc.erase(it);
  }
  for (const auto& [id, e] : by_doc) problems.push_back("document " + id + ": predictions for a document without gold pairs");
  if (!problems.empty()) {
    std::string msg = "prediction and gold pair domains differ:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }

  EvalReport report = evaluate(pred, gold, scheme, exclude);
  report.direction = direction_used.empty() ? "forward" : direction_used;
  const Prf awareness = temporal_awareness(pred, gold, scheme);
  *ctx.out << report.to_text();
  *ctx.out << "temporal awareness  P " << fixed4(awareness.precision) << "  R " << fixed4(awareness.recall) << "  F1 "
           << fixed4(awareness.f1) << "\n";
  if (!a.json_out.empty()) {
    json j = json::parse(report.to_json());
    j["temporal_awareness"] = {{"precision", awareness.precision}, {"recall", awareness.recall}, {"f1", awareness.f1}};
    write_text_file(a.json_out, j.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string corpus;
  std::string pred;
  bool no_symmetry = false;
  bool no_transitivity = false;
  bool no_causal = false;
};

int cmd_check(Context& ctx, const CheckArgs& a) {
  const RunConfig& cfg = ctx.config;
  const std::string corpus = a.corpus.empty() ? cfg.require("test") : a.corpus;
  if (!fs::exists(corpus)) throw ConfigError("corpus does not exist: " + corpus);
  if (!a.pred.empty() && !fs::exists(a.pred)) throw ConfigError("prediction file does not exist: " + a.pred);
  const LabelScheme scheme = cfg.scheme();
  const ConstraintFlags flags{!a.no_symmetry, !a.no_transitivity, scheme.has_causal() && !a.no_causal};
  const auto docs = load_corpus(corpus, scheme);

  std::vector<std::pair<const Document*, Assignment>> graphs;
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;
  if (a.pred.empty()) {
    for (const auto& d : docs) graphs.emplace_back(&d, full_gold(d));
  } else {
    for (const auto& e : read_predictions(a.pred, docs, scheme)) graphs.emplace_back(by_id.at(e.table.doc_id), *e.chosen);
  }
  long total = 0, bad_docs = 0;
  for (const auto& [doc, graph] : graphs) {
    const auto violations = validate_graph(graph, scheme, flags);
    if (violations.empty()) continue;
    ++bad_docs;
    for (const auto& v : violations) {
      *ctx.out << doc->id << "\t" << describe(v, *doc) << "\n";
      ++total;
    }
  }
  *ctx.out << total << " violations in " << bad_docs << " of " << graphs.size() << " documents\n";
  return total == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthArgs {
  std::string out = "-";
  std::string arrangements;
  SynthConfig synth;
};

int cmd_synthesize(Context& ctx, const SynthArgs& a) {
  const LabelScheme scheme = ctx.config.scheme();
  const SyntheticCorpus corpus = synthesize_corpus(a.synth, scheme);
  {
    OutputTarget target(a.out, *ctx.out);
    write_corpus(target.stream(), corpus.documents, scheme);
  }
  if (!a.arrangements.empty()) {
    std::ostringstream ss;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      json times = json::array();
      for (const auto& t : corpus.arrangements[d]) times.push_back({t.start, t.end});
      ss << json{{"id", corpus.documents[d].id}, {"times", times}}.dump() << "\n";
    }
    write_text_file(a.arrangements, ss.str());
  }
  spdlog::info("synthesized {} documents", corpus.documents.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  bool synthetic = false;
  double noise = 0.3;
  int docs = 300;
  int events = 6;
  std::uint64_t data_seed = 1;
  std::string out;
};

struct GridRow {
  std::string name;
  bool both_way_training;
  bool transitivity;
  bool symmetry;
};

const std::vector<GridRow>& grid_rows() {
  static const std::vector<GridRow> rows = {
      {"M1: fwd L", false, false, false},         {"M2: fwd L + T", false, true, false},
      {"fwd L + S", false, false, true},          {"fwd L + S + T", false, true, true},
      {"M3: both L", true, false, false},         {"M4: both L + T", true, true, false},
      {"both L + S", true, false, true},          {"Proposed: both L + S + T", true, true, true},
  };
  return rows;
}

int cmd_ablate(Context& ctx, const AblateArgs& a) {
  const RunConfig& cfg = ctx.config;
  const LabelScheme scheme = cfg.scheme();
  cfg.check_paths({"scheme", "train", "dev", "test", "embeddings"});
  TrainConfig base = cfg.train_config();
  base.jobs = ctx.jobs;
  base.validate();
  check_causal_support(base.constraints, scheme);
  const LabelSet exclude = exclude_set(base.exclude, scheme);

  EmbeddingSource embeddings = EmbeddingSource::hashed(16);
  Dataset train, dev, test;
  if (a.synthetic) {
    if (cfg.has("embeddings") || cfg.has("hashed")) embeddings = cfg.embeddings();
    auto make = [&](std::uint64_t seed, int docs) {
      SynthConfig sc;
      sc.seed = seed;
      sc.docs = docs;
      sc.events_per_doc = a.events;
      sc.noise = a.noise;
      return make_dataset(synthesize_corpus(sc, scheme).documents, embeddings, base.window);
    };
    train = make(a.data_seed * 3 + 0, a.docs);
    dev = make(a.data_seed * 3 + 1, std::max(1, a.docs / 10));
    test = make(a.data_seed * 3 + 2, std::max(1, a.docs / 6));
  } else {
    embeddings = cfg.embeddings();
    train = load_split(cfg.require("train"), scheme, embeddings, base.window);
    dev = load_split(cfg.require("dev"), scheme, embeddings, base.window);
    test = load_split(cfg.require("test"), scheme, embeddings, base.window);
  }
  const fs::path out_dir = a.out.empty() ? fs::path(cfg.get_or("output", "runs")) / "ablation" : fs::path(a.out);
  fs::create_directories(out_dir);

  auto test_f1 = [&](const ModelParams& p, bool global, ConstraintFlags flags, Direction dir, long* bad_docs) {
    DecodeOptions o;
    o.global = global;
    o.constraints = flags;
    o.direction = dir;
    const DecodedSplit s = decode_dataset(test, p, scheme, o, ctx.jobs);
    if (bad_docs) *bad_docs += s.docs_with_violations;
    return micro_average(s.predicted, s.gold, exclude).f1;
  };

  const auto& rows = grid_rows();
  const double n_seeds = static_cast<double>(base.seeds.size());
  std::vector<double> fwd(rows.size(), 0.0), both(rows.size(), 0.0);
  std::vector<long> viol(rows.size(), 0);
  // [local w/ feat, global w/ feat, local w/o feat, global w/o feat]
  std::array<double, 4> feat{};
  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary);
  auto log_epoch = [&](const EpochRecord& r) {
    metrics << r.to_json() << "\n";
    spdlog::debug("[{} seed {} epoch {}] dev F1 {:.4f}", r.stage, r.seed, r.epoch, r.dev.f1);
  };

  for (std::uint64_t seed : base.seeds) {
    for (bool both_way : {false, true}) {
      TrainConfig tc = base;
      tc.direction = both_way ? Direction::kBoth : Direction::kForward;
      tc.model.use_features = false;
      const TrainResult local = train_local(train, dev, scheme, tc, seed, log_epoch);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const GridRow& row = rows[r];
        if (row.both_way_training != both_way) continue;
        ConstraintFlags flags{row.symmetry, row.transitivity, base.constraints.causal};
        const bool global = row.symmetry || row.transitivity;
        ModelParams params = local.params;
        if (global) {
          TrainConfig gc = tc;
          gc.constraints = flags;
          params = train_global(train, dev, scheme, gc, local.params, seed, log_epoch).params;
        }
        const double f = test_f1(params, global, flags, Direction::kForward, &viol[r]);
        const double b = test_f1(params, global, flags, Direction::kBoth, nullptr);
        fwd[r] += f / n_seeds;
        both[r] += b / n_seeds;
        spdlog::info("seed {} {}: forward {:.4f} both-way {:.4f}", seed, row.name, f, b);
        if (both_way && !global) feat[2] += f / n_seeds;
        if (both_way && row.symmetry && row.transitivity) feat[3] += f / n_seeds;
      }
    }
    TrainConfig tc = base;
    tc.direction = Direction::kBoth;
    tc.model.use_features = true;
    const TrainResult local = train_local(train, dev, scheme, tc, seed, log_epoch);
    ConstraintFlags flags{true, true, base.constraints.causal};
    TrainConfig gc = tc;
    gc.constraints = flags;
    const ModelParams global = train_global(train, dev, scheme, gc, local.params, seed, log_epoch).params;
    feat[0] += test_f1(local.params, false, flags, Direction::kForward, nullptr) / n_seeds;
    feat[1] += test_f1(global, true, flags, Direction::kForward, nullptr) / n_seeds;
  }

  std::ostringstream text;
  text << "Constraint ablation (micro F1, mean over " << base.seeds.size() << " seed(s))\n";
  text << std::left << std::setw(28) << "model" << std::setw(10) << "fwd-test" << std::setw(11) << "both-test"
       << "violating docs (fwd)\n";
  json j = {{"seeds", base.seeds}, {"rows", json::array()}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    text << std::left << std::setw(28) << rows[r].name << std::setw(10) << fixed4(fwd[r]) << std::setw(11)
         << fixed4(both[r]) << viol[r] << "\n";
    j["rows"].push_back({{"model", rows[r].name},
                         {"training", rows[r].both_way_training ? "both" : "forward"},
                         {"transitivity", rows[r].transitivity},
                         {"symmetry", rows[r].symmetry},
                         {"forward_f1", fwd[r]},
                         {"both_way_f1", both[r]},
                         {"violating_docs", viol[r]}});
  }
  text << "\nFeature ablation (forward test, both-way training)\n";
  text << std::left << std::setw(14) << "local w/ feat" << std::setw(15) << "global w/ feat" << std::setw(15)
       << "local w/o feat" << "global w/o feat\n";
  text << std::left << std::setw(14) << fixed4(feat[0]) << std::setw(15) << fixed4(feat[1]) << std::setw(15)
       << fixed4(feat[2]) << fixed4(feat[3]) << "\n";
  j["features"] = {{"local_with", feat[0]}, {"global_with", feat[1]}, {"local_without", feat[2]},
                   {"global_without", feat[3]}};
  *ctx.out << text.str();
  write_text_file(out_dir / "ablation.txt", text.str());
  write_text_file(out_dir / "ablation.json", j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string metrics;
};

int cmd_report(Context& ctx, const ReportArgs& a) {
  fs::path path = a.metrics.empty() ? fs::path(ctx.config.get_or("output", "runs")) : fs::path(a.metrics);
  if (fs::is_directory(path)) path /= "metrics.jsonl";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics log " + path.string());
  std::string line;
  int line_no = 0;
  std::ostream& out = *ctx.out;
  std::vector<json> summaries;
  struct Best {
    int epochs = 0;
    int best_epoch = -1;
    double best_f1 = 0.0;
    double last_loss = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Best> runs;  // (seed, stage)
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), path.string(), line_no);
    }
    if (j.contains("summary")) {
      summaries.push_back(j["summary"]);
      continue;
    }
    if (!j.contains("stage") || !j.contains("epoch")) throw ParseError("not an epoch or summary record", path.string(), line_no);
    auto& b = runs[{j["seed"].dump(), j["stage"].get<std::string>()}];
    ++b.epochs;
    b.last_loss = j.value("train_loss", 0.0);
    if (j.value("selected", false)) {
      b.best_epoch = j["epoch"].get<int>();
      b.best_f1 = j.value("dev_f1", 0.0);
    }
  }
  out << std::left << std::setw(8) << "seed" << std::setw(8) << "stage" << std::setw(8) << "epochs" << std::setw(12)
      << "best epoch" << std::setw(10) << "best dev" << "last loss\n";
  for (const auto& [key, b] : runs) {
    out << std::left << std::setw(8) << key.first << std::setw(8) << key.second << std::setw(8) << b.epochs
        << std::setw(12) << (b.best_epoch < 0 ? std::string("start") : std::to_string(b.best_epoch)) << std::setw(10)
        << (b.best_epoch < 0 ? std::string("-") : fixed4(b.best_f1)) << fixed4(b.last_loss) << "\n";
  }
  if (!summaries.empty()) {
    out << "\n" << std::left << std::setw(8) << "seed" << std::setw(8) << "stage" << std::setw(10) << "dev_f1"
        << "test_f1\n";
    for (const auto& s : summaries) {
      const std::string seed = s["seed"].is_string() ? s["seed"].get<std::string>() : s["seed"].dump();
      out << std::left << std::setw(8) << seed << std::setw(8) << s.value("stage", "") << std::setw(10)
          << fixed4(s.value("dev_f1", 0.0)) << (s.contains("test_f1") ? fixed4(s["test_f1"].get<double>()) : "-")
          << "\n";
    }
  }
  return kExitOk;
}

void configure_logging(const std::string& level, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("[%l] %v");
  auto logger = std::make_shared<spdlog::logger>("tempssvm", sink);
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemeError*>(&e)) return kExitUsage;
  if (dynamic_cast<const InvariantError*>(&e) || dynamic_cast<const SolverError*>(&e)) return kExitInvariant;
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  return kExitInvariant;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured temporal relation extraction: training, decoding and evaluation."};
  app.name("tempssvm");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  std::string log_level;
  app.add_option("-c,--config", config_path, "Config file (default: $" + std::string(kConfigEnv) + ")");
  app.add_option("-s,--set", overrides, "Override a config key: key=value (repeatable)");
  app.add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the local scorer and/or the structured model");
  train->add_option("--stage", train_args.stage, "local, global or both")->check(CLI::IsMember({"local", "global", "both"}));
  train->add_option("--init", train_args.init, "Stage-one checkpoint to start stage two from");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Decode a corpus with a trained checkpoint");
  predict->add_option("--checkpoint", predict_args.checkpoint, "Model checkpoint")->required();
  predict->add_option("--corpus", predict_args.corpus, "Corpus to decode (default: config key test)");
  predict->add_option("-o,--out", predict_args.out, "Prediction file ('-' for stdout)");
  predict->add_option("--decode", predict_args.decode, "local or global")->check(CLI::IsMember({"local", "global"}));
  predict->add_flag("--no-symmetry", predict_args.no_symmetry, "Drop the symmetry constraint");
  predict->add_flag("--no-transitivity", predict_args.no_transitivity, "Drop the transitivity constraint");
  predict->add_flag("--causal", predict_args.causal, "Add the temporal-causal constraint");
  predict->add_option("--eval-direction", predict_args.direction, "forward, backward or both")
      ->check(CLI::IsMember({"forward", "backward", "both"}));

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a prediction file against a gold corpus");
  evaluate_cmd->add_option("--pred", eval_args.pred, "Prediction file")->required();
  evaluate_cmd->add_option("--gold", eval_args.gold, "Gold corpus (default: config key test)");
  auto* excl = evaluate_cmd->add_option("--exclude", eval_args.exclude, "Labels left out of micro-F1 ('none' for none)")
                   ->delimiter(',');
  evaluate_cmd->add_option("--direction", eval_args.direction, "auto, forward, backward or both")
      ->check(CLI::IsMember({"auto", "forward", "backward", "both"}));
  evaluate_cmd->add_option("--json", eval_args.json_out, "Also write the report as JSON");

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "List constraint violations of a gold corpus or a prediction file");
  check->add_option("--corpus", check_args.corpus, "Corpus (default: config key test)");
  check->add_option("--pred", check_args.pred, "Prediction file; without it the gold graphs are checked");
  check->add_flag("--no-symmetry", check_args.no_symmetry, "Skip symmetry");
  check->add_flag("--no-transitivity", check_args.no_transitivity, "Skip transitivity");
  check->add_flag("--no-causal", check_args.no_causal, "Skip temporal-causal coupling");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synthesize", "Generate a synthetic corpus");
  synth->add_option("-o,--out", synth_args.out, "Corpus file ('-' for stdout)");
  synth->add_option("--docs", synth_args.synth.docs, "Documents")->check(CLI::PositiveNumber);
  synth->add_option("--events", synth_args.synth.events_per_doc, "Events per document")->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_args.synth.noise, "Cue corruption probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_args.synth.seed, "Generator seed");
  synth->add_option("--events-per-sentence", synth_args.synth.events_per_sentence, "Events per sentence")
      ->check(CLI::PositiveNumber);
  synth->add_option("--cue-copies", synth_args.synth.cue_copies, "Slot cue tokens per event")->check(CLI::PositiveNumber);
  synth->add_option("--pair-rate", synth_args.synth.pair_rate, "Chance an event shares its slot")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--triple-rate", synth_args.synth.triple_rate, "Chance a shared slot holds three events")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--causal-rate", synth_args.synth.causal_rate, "Chance a pair carries a causal variable")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--arrangements", synth_args.arrangements, "Also write the interval arrangements (JSONL)");

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Constraint and feature ablation grid");
  ablate->add_flag("--synthetic", ablate_args.synthetic, "Generate train/dev/test instead of reading the config");
  ablate->add_option("--noise", ablate_args.noise, "Synthetic noise")->check(CLI::Range(0.0, 1.0));
  ablate->add_option("--docs", ablate_args.docs, "Synthetic training documents")->check(CLI::PositiveNumber);
  ablate->add_option("--events", ablate_args.events, "Synthetic events per document")->check(CLI::PositiveNumber);
  ablate->add_option("--data-seed", ablate_args.data_seed, "Synthetic corpus seed");
  ablate->add_option("-o,--out", ablate_args.out, "Output directory (default: <output>/ablation)");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Summarize a training metrics log");
  report->add_option("--metrics", report_args.metrics, "metrics.jsonl or its directory (default: config key output)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    ctx.jobs = jobs;
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
    }
    if (!config_path.empty()) ctx.config = RunConfig::load(config_path);
    for (const auto& o : overrides) ctx.config.set(o);
    if (log_level.empty()) log_level = ctx.config.get_or("log_level", "info");
    configure_logging(log_level, err);
    eval_args.exclude_set = excl->count() > 0;

    if (train->parsed()) return cmd_train(ctx, train_args);
    if (predict->parsed()) return cmd_predict(ctx, predict_args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ctx, eval_args);
    if (check->parsed()) return cmd_check(ctx, check_args);
    if (synth->parsed()) return cmd_synthesize(ctx, synth_args);
    if (ablate->parsed()) return cmd_ablate(ctx, ablate_args);
    if (report->parsed()) return cmd_report(ctx, report_args);
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace tempssvm::cli
