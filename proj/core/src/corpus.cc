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

#include "tempssvm/corpus.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tempssvm/error.h"
#include "tempssvm/rng.h"

namespace tempssvm {

using nlohmann::json;

int Document::sentence_of_token(int token) const {
  for (std::size_t s = 0; s < sentence_spans.size(); ++s) {
    if (token >= sentence_spans[s].first && token < sentence_spans[s].second) return static_cast<int>(s);
  }
  return -1;
}

int Document::event_index(std::string_view event_id) const {
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (events[e].id == event_id) return static_cast<int>(e);
  }
  return -1;
}

void validate_document(const Document& doc) {
  const std::string where = "document '" + doc.id + "': ";
  if (doc.id.empty()) throw DataError("document without id");
  const int n = static_cast<int>(doc.tokens.size());
  if (static_cast<int>(doc.pos_tags.size()) != n) {
    throw DataError(where + "pos has " + std::to_string(doc.pos_tags.size()) + " entries for " +
                    std::to_string(n) + " tokens");
  }
  for (int tag : doc.pos_tags) {
    if (tag < 0) throw DataError(where + "negative pos tag");
  }
  int prev_end = 0;
  for (const auto& [b, e] : doc.sentence_spans) {
    if (b < prev_end || b >= e || e > n) {
      throw DataError(where + "bad sentence span [" + std::to_string(b) + ", " + std::to_string(e) + ")");
    }
    prev_end = e;
  }
  for (std::size_t i = 0; i < doc.events.size(); ++i) {
    const Event& ev = doc.events[i];
    if (ev.token < 0 || ev.token >= n) throw DataError(where + "event '" + ev.id + "' token out of range");
    if (doc.sentence_of_token(ev.token) < 0) {
      throw DataError(where + "event '" + ev.id + "' lies outside every sentence span");
    }
    if (ev.tense < 0 || ev.tense >= kNumTenses) throw DataError(where + "event '" + ev.id + "' tense out of range");
    if (ev.polarity < 0 || ev.polarity >= kNumPolarities) {
      throw DataError(where + "event '" + ev.id + "' polarity out of range");
    }
    if (i > 0 && doc.events[i - 1].token >= ev.token) {
      throw DataError(where + "events must be listed in textual order with distinct tokens ('" + ev.id + "')");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (doc.events[j].id == ev.id) throw DataError(where + "duplicate event id '" + ev.id + "'");
    }
  }
  auto check_pair = [&](int s, int t, const char* kind) {
    if (s < 0 || s >= doc.num_events() || t < 0 || t >= doc.num_events()) {
      throw DataError(where + kind + " relation references an unknown event index");
    }
    if (s >= t) {
      throw DataError(where + kind + " relation (" + doc.events[static_cast<std::size_t>(s)].id + ", " +
                      doc.events[static_cast<std::size_t>(t)].id + ") is not in textual order");
    }
  };
  std::vector<std::pair<int, int>> seen;
  for (const auto& r : doc.relations) {
    check_pair(r.source, r.target, "temporal");
    seen.emplace_back(r.source, r.target);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw DataError(where + "duplicate temporal relation");
  }
  for (const auto& r : doc.causal_relations) check_pair(r.source, r.target, "causal");
}

namespace {

int resolve_event(const Document& doc, const json& id, const std::string& source, int line) {
  if (!id.is_string()) throw ParseError("event reference must be a string", source, line);
  const int idx = doc.event_index(id.get<std::string>());
  if (idx < 0) {
    throw DataError(source + ":" + std::to_string(line) + ": relation references undeclared event '" +
                    id.get<std::string>() + "'");
  }
  return idx;
}

}  // namespace

Document parse_document(std::string_view json_line, const LabelScheme& scheme, const std::string& source,
                        int line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), source, line);
  }
  Document doc;
  try {
    doc.id = j.at("id").get<std::string>();
    doc.tokens = j.at("tokens").get<std::vector<std::string>>();
    doc.pos_tags = j.at("pos").get<std::vector<int>>();
    for (const auto& span : j.at("sentences")) {
      if (!span.is_array() || span.size() != 2) throw ParseError("sentence span must be [start, end]", source, line);
      doc.sentence_spans.emplace_back(span[0].get<int>(), span[1].get<int>());
    }
    for (const auto& ev : j.at("events")) {
      Event e;
      if (ev.is_array()) {
        if (ev.size() != 2) throw ParseError("event must be [id, token]", source, line);
        e.id = ev[0].get<std::string>();
        e.token = ev[1].get<int>();
      } else {
        e.id = ev.at("id").get<std::string>();
        e.token = ev.at("token").get<int>();
        e.tense = ev.value("tense", 0);
        e.polarity = ev.value("polarity", 0);
      }
      doc.events.push_back(std::move(e));
    }
    if (j.contains("relations")) {
      for (const auto& r : j.at("relations")) {
        if (!r.is_array() || r.size() != 3) throw ParseError("relation must be [source, target, label]", source, line);
        GoldRelation rel;
        rel.source = resolve_event(doc, r[0], source, line);
        rel.target = resolve_event(doc, r[1], source, line);
        rel.label = scheme.label(r[2].get<std::string>());
        doc.relations.push_back(rel);
      }
    }
    if (j.contains("causal")) {
      for (const auto& r : j.at("causal")) {
        if (!r.is_array() || r.size() != 3) throw ParseError("causal relation must be [source, target, label]", source, line);
        GoldCausal rel;
        rel.source = resolve_event(doc, r[0], source, line);
        rel.target = resolve_event(doc, r[1], source, line);
        rel.label = scheme.causal_label(r[2].get<std::string>());
        doc.causal_relations.push_back(rel);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), source, line);
  }
  try {
    validate_document(doc);
  } catch (const DataError& e) {
    throw DataError(source + ":" + std::to_string(line) + ": " + e.what());
  }
  return doc;
}

std::string format_document(const Document& doc, const LabelScheme& scheme) {
  json j;
  j["id"] = doc.id;
  j["tokens"] = doc.tokens;
  j["pos"] = doc.pos_tags;
  json spans = json::array();
  for (const auto& [b, e] : doc.sentence_spans) spans.push_back({b, e});
  j["sentences"] = spans;
  json events = json::array();
  for (const auto& ev : doc.events) {
    events.push_back({{"id", ev.id}, {"token", ev.token}, {"tense", ev.tense}, {"polarity", ev.polarity}});
  }
  j["events"] = events;
  json rels = json::array();
  for (const auto& r : doc.relations) {
    rels.push_back({doc.events[static_cast<std::size_t>(r.source)].id, doc.events[static_cast<std::size_t>(r.target)].id,
                    scheme.label_name(r.label)});
  }
  j["relations"] = rels;
  if (!doc.causal_relations.empty()) {
    json causal = json::array();
    for (const auto& r : doc.causal_relations) {
      causal.push_back({doc.events[static_cast<std::size_t>(r.source)].id,
                        doc.events[static_cast<std::size_t>(r.target)].id, scheme.causal_name(r.label)});
    }
    j["causal"] = causal;
  }
  return j.dump();
}

std::vector<Document> read_corpus(std::istream& in, const LabelScheme& scheme, const std::string& source) {
  std::vector<Document> docs;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(parse_document(line, scheme, source, line_no));
    for (std::size_t k = 0; k + 1 < docs.size(); ++k) {
      if (docs[k].id == docs.back().id) {
        throw DataError(source + ":" + std::to_string(line_no) + ": duplicate document id '" + docs.back().id + "'");
      }
    }
  }
  if (docs.empty()) spdlog::warn("corpus {} contains no documents", source);
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, const LabelScheme& scheme) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return read_corpus(in, scheme, path.string());
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs, const LabelScheme& scheme) {
  for (const auto& doc : docs) out << format_document(doc, scheme) << '\n';
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs, const LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, docs, scheme);
}

std::vector<EventPair> generate_candidates(const Document& doc, int window) {
  if (window < 0) throw ConfigError("candidate window must be >= 0");
  std::vector<EventPair> pairs;
  for (int i = 0; i < doc.num_events(); ++i) {
    const int si = doc.sentence_of_event(i);
    for (int j = i + 1; j < doc.num_events(); ++j) {
      if (std::abs(doc.sentence_of_event(j) - si) <= window) pairs.push_back({i, j});
    }
  }
  return pairs;
}

Direction parse_direction(std::string_view s) {
  if (s == "forward") return Direction::kForward;
  if (s == "backward") return Direction::kBackward;
  if (s == "both" || s == "both-way") return Direction::kBoth;
  throw ConfigError("unknown direction '" + std::string(s) + "' (forward, backward, both)");
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kForward: return "forward";
    case Direction::kBackward: return "backward";
    case Direction::kBoth: return "both";
  }
  return "?";
}

Assignment Instance::gold_assignment() const {
  Assignment a;
  a.pairs = pairs;
  a.labels = gold;
  a.causal_pairs = causal_pairs;
  a.causal = causal_gold;
  return a;
}

Instance make_instance(std::shared_ptr<const Document> doc, int window) {
  Instance inst;
  const auto candidates = generate_candidates(*doc, window);
  if (doc->relations.empty()) {
    inst.pairs = candidates;
  } else {
    std::map<EventPair, Label> gold;
    for (const auto& r : doc->relations) gold[{r.source, r.target}] = r.label;
    for (const auto& p : candidates) {
      if (auto it = gold.find(p); it != gold.end()) {
        inst.pairs.push_back(p);
        inst.gold.push_back(it->second);
      }
    }
  }
  for (const auto& c : doc->causal_relations) {
    const EventPair p{c.source, c.target};
    if (std::binary_search(inst.pairs.begin(), inst.pairs.end(), p)) {
      inst.causal_pairs.push_back(p);
      inst.causal_gold.push_back(c.label);
    }
  }
  inst.doc = std::move(doc);
  return inst;
}

std::vector<Instance> make_instances(const std::vector<Document>& docs, int window) {
  std::vector<Instance> out;
  for (const auto& d : docs) {
    Instance inst = make_instance(std::make_shared<const Document>(d), window);
    if (inst.pairs.empty()) {
      spdlog::debug("document {} has no candidate pairs; skipped", d.id);
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

Instance flip_instance(const Instance& instance, const LabelScheme& scheme) {
  Instance out;
  out.doc = instance.doc;
  for (const auto& p : instance.pairs) out.pairs.push_back(p.flipped());
  for (const auto& l : instance.gold) out.gold.push_back(scheme.reverse(l));
  for (const auto& p : instance.causal_pairs) out.causal_pairs.push_back(p.flipped());
  for (const auto& c : instance.causal_gold) out.causal_gold.push_back(reverse_causal(c));
  return out;
}

Instance augment_flipped(const Instance& instance, const LabelScheme& scheme) {
  Instance out = instance;
  const Instance back = flip_instance(instance, scheme);
  out.pairs.insert(out.pairs.end(), back.pairs.begin(), back.pairs.end());
  out.gold.insert(out.gold.end(), back.gold.begin(), back.gold.end());
  out.causal_pairs.insert(out.causal_pairs.end(), back.causal_pairs.begin(), back.causal_pairs.end());
  out.causal_gold.insert(out.causal_gold.end(), back.causal_gold.begin(), back.causal_gold.end());
  return out;
}

std::vector<Instance> augment_flipped(const std::vector<Instance>& instances, const LabelScheme& scheme) {
  std::vector<Instance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(augment_flipped(inst, scheme));
  return out;
}

Instance with_direction(const Instance& forward, Direction d, const LabelScheme& scheme) {
  switch (d) {
    case Direction::kForward: return forward;
    case Direction::kBackward: return flip_instance(forward, scheme);
    case Direction::kBoth: return augment_flipped(forward, scheme);
  }
  return forward;
}

// ---------------------------------------------------------------------------

Label label_for_times(const EventTime& a, const EventTime& b, const LabelScheme& scheme) {
  for (int l = 0; l < scheme.size(); ++l) {
    const auto& pattern = scheme.pattern(Label{l});
    if (!pattern.unconstrained() && pattern_holds(pattern, a.start, a.end, b.start, b.end)) return Label{l};
  }
  if (auto v = scheme.vague()) return *v;
  throw SchemeError("scheme '" + scheme.name() + "' has no label for an arrangement and no unconstrained label");
}

SyntheticCorpus synthesize_corpus(const SynthConfig& config, const LabelScheme& scheme) {
  if (config.docs < 1 || config.events_per_doc < 1) throw ConfigError("synthetic corpus needs docs >= 1 and events >= 1");
  if (config.noise < 0.0 || config.noise > 1.0) throw ConfigError("noise must lie in [0, 1]");
  if (config.events_per_sentence < 1 || config.cue_copies < 1) {
    throw ConfigError("synthetic corpus needs events_per_sentence >= 1 and cue_copies >= 1");
  }
  if (!(config.pair_rate >= 0.0 && config.pair_rate <= 1.0) || !(config.triple_rate >= 0.0 && config.triple_rate <= 1.0)) {
    throw ConfigError("pair_rate and triple_rate must lie in [0, 1]");
  }

  constexpr int kFillerVocab = 24;
  constexpr int kEventVocab = 32;
  constexpr int kFillerTagBase = 3;  // filler tags 3..6
  constexpr int kEventTag = 1;
  constexpr int kCueTag = 7;
  constexpr int kConnectiveTag = 8;
  constexpr int kPunctTag = 2;
  constexpr int kSlotWidth = 4;  // time points per slot; slots are separated by one point

  // Interval pairs inside one slot, grouped by the label they realize.
  std::vector<std::vector<std::pair<EventTime, EventTime>>> in_slot(static_cast<std::size_t>(scheme.size()));
  for (int s1 = 0; s1 < kSlotWidth; ++s1) {
    for (int e1 = s1 + 1; e1 < kSlotWidth; ++e1) {
      for (int s2 = 0; s2 < kSlotWidth; ++s2) {
        for (int e2 = s2 + 1; e2 < kSlotWidth; ++e2) {
          const EventTime a{s1, e1}, b{s2, e2};
          in_slot[static_cast<std::size_t>(label_for_times(a, b, scheme).index)].emplace_back(a, b);
        }
      }
    }
  }
  std::vector<int> realizable;
  for (int l = 0; l < scheme.size(); ++l) {
    if (!in_slot[static_cast<std::size_t>(l)].empty()) realizable.push_back(l);
  }

  Rng rng(splitmix64(config.seed));
  SyntheticCorpus out;
  for (int d = 0; d < config.docs; ++d) {
    Document doc;
    doc.id = "syn" + std::to_string(config.seed) + "_" + std::to_string(d);
    const int n = config.events_per_doc;

    // Text-adjacent events may share a slot; slots are then shuffled onto
    // the timeline.
    std::vector<int> slot_of(static_cast<std::size_t>(n));
    std::vector<int> sub_of(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> groups;
    for (int e = 0; e < n; ++e) {
      if (e + 1 < n && rng.bernoulli(config.pair_rate)) {
        if (e + 2 < n && rng.bernoulli(config.triple_rate)) {
          groups.push_back({e, e + 1, e + 2});
          e += 2;
        } else {
          groups.push_back({e, e + 1});
          ++e;
        }
      } else {
        groups.push_back({e});
      }
    }
    std::vector<int> order(groups.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = static_cast<int>(g);
    rng.shuffle(order);
    std::vector<EventTime> times(static_cast<std::size_t>(n));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const int slot = order[g];
      const int base = slot * (kSlotWidth + 1);
      const auto& members = groups[g];
      if (members.size() == 3) {
        // Two sub-positions, so every pair is BEFORE, AFTER or equal.
        for (int m : members) {
          const int q = static_cast<int>(rng.below(2));
          sub_of[static_cast<std::size_t>(m)] = q;
          times[static_cast<std::size_t>(m)] = {base + 2 * q, base + 2 * q + 1};
        }
      } else if (members.size() == 2) {
        const int label = realizable[rng.below(realizable.size())];
        const auto& options = in_slot[static_cast<std::size_t>(label)];
        const auto& [a, b] = options[rng.below(options.size())];
        times[static_cast<std::size_t>(members[0])] = {base + a.start, base + a.end};
        times[static_cast<std::size_t>(members[1])] = {base + b.start, base + b.end};
      } else {
        const int s = rng.between(0, kSlotWidth - 2);
        times[static_cast<std::size_t>(members[0])] = {base + s, base + rng.between(s + 1, kSlotWidth - 1)};
      }
      for (int m : members) slot_of[static_cast<std::size_t>(m)] = slot;
    }
    const int num_slots = static_cast<int>(groups.size());

    auto push = [&](std::string tok, int tag) {
      doc.tokens.push_back(std::move(tok));
      doc.pos_tags.push_back(tag);
    };
    auto noisy = [&](int truth, int range) {
      return rng.bernoulli(config.noise) ? static_cast<int>(rng.below(static_cast<std::uint64_t>(range))) : truth;
    };

    int e = 0;
    while (e < n) {
      const int begin = static_cast<int>(doc.tokens.size());
      for (int k = 0; k < config.events_per_sentence && e < n; ++k, ++e) {
        const int fillers = rng.between(1, 3);
        for (int f = 0; f < fillers; ++f) {
          push("w" + std::to_string(rng.below(kFillerVocab)), kFillerTagBase + static_cast<int>(rng.below(4)));
        }
        Event ev;
        ev.id = "e" + std::to_string(e + 1);
        ev.token = static_cast<int>(doc.tokens.size());
        ev.tense = static_cast<int>(rng.below(kNumTenses));
        ev.polarity = rng.bernoulli(0.1) ? 1 : 0;
        push("v" + std::to_string(rng.below(kEventVocab)), kEventTag);
        doc.events.push_back(ev);
        for (int c = 0; c < config.cue_copies; ++c) {
          push("at" + std::to_string(noisy(slot_of[static_cast<std::size_t>(e)], num_slots)), kCueTag);
        }
        push("sub" + std::to_string(noisy(sub_of[static_cast<std::size_t>(e)], 2)), kCueTag);
        if (e + 1 < n) {
          const Label rel = label_for_times(times[static_cast<std::size_t>(e)], times[static_cast<std::size_t>(e + 1)], scheme);
          push("rel" + std::to_string(noisy(rel.index, scheme.size())), kConnectiveTag);
        }
      }
      push(".", kPunctTag);
      doc.sentence_spans.emplace_back(begin, static_cast<int>(doc.tokens.size()));
    }

    const auto causal = scheme.causal();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Label l = label_for_times(times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(j)], scheme);
        doc.relations.push_back({i, j, l});
        if (causal && rng.bernoulli(config.causal_rate)) {
          CausalLabel c = CausalLabel::kNone;
          if (l == causal->anchor) c = CausalLabel::kCauses;
          if (l == scheme.reverse(causal->anchor)) c = CausalLabel::kCausedBy;
          doc.causal_relations.push_back({i, j, c});
        }
      }
    }
    validate_document(doc);
    out.documents.push_back(std::move(doc));
    out.arrangements.push_back(std::move(times));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kEmbeddingMagic[8] = {'T', 'S', 'E', 'M', 'B', 'v', '1', '\n'};

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_uint(std::istream& in, int bytes, const std::string& source) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw ParseError("truncated binary embedding file", source, 0);
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

EmbeddingSource EmbeddingSource::hashed(int dim) {
  if (dim < 1) throw ConfigError("embedding dimension must be positive");
  EmbeddingSource s;
  s.hashed_ = true;
  s.dim_ = dim;
  return s;
}

Vec EmbeddingSource::hashed_vector(std::string_view token, int dim) {
  Rng rng(splitmix64(fnv1a64(token)));
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

void EmbeddingSource::insert(const std::string& doc_id, int token, std::vector<float> values) {
  if (hashed_) {
    hashed_ = false;
    dim_ = static_cast<int>(values.size());
  }
  if (static_cast<int>(values.size()) != dim_) throw DataError("embedding record has wrong dimension");
  auto key = std::make_pair(doc_id, token);
  auto it = std::lower_bound(records_.begin(), records_.end(), key,
                             [](const auto& rec, const auto& k) { return rec.first < k; });
  if (it != records_.end() && it->first == key) {
    it->second = std::move(values);
  } else {
    records_.insert(it, {std::move(key), std::move(values)});
  }
}

Mat EmbeddingSource::word_vectors(const Document& doc) const {
  Mat out(static_cast<Eigen::Index>(doc.tokens.size()), dim_);
  for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
    if (hashed_) {
      out.row(static_cast<Eigen::Index>(t)) = hashed_vector(doc.tokens[t], dim_).transpose();
      continue;
    }
    auto key = std::make_pair(doc.id, static_cast<int>(t));
    auto it = std::lower_bound(records_.begin(), records_.end(), key,
                               [](const auto& rec, const auto& k) { return rec.first < k; });
    if (it == records_.end() || it->first != key) {
      throw DataError("no embedding for token " + std::to_string(t) + " of document '" + doc.id + "'");
    }
    for (int k = 0; k < dim_; ++k) out(static_cast<Eigen::Index>(t), k) = it->second[static_cast<std::size_t>(k)];
  }
  return out;
}

EmbeddingSource EmbeddingSource::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding sidecar " + path.string());
  const std::string source = path.string();
  char magic[8] = {};
  in.read(magic, 8);
  EmbeddingSource s;
  s.hashed_ = false;
  if (in.gcount() == 8 && std::equal(magic, magic + 8, kEmbeddingMagic)) {
    s.dim_ = static_cast<int>(get_uint(in, 4, source));
    const std::uint64_t count = get_uint(in, 8, source);
    for (std::uint64_t r = 0; r < count; ++r) {
      const auto len = get_uint(in, 4, source);
      std::string doc_id(len, '\0');
      in.read(doc_id.data(), static_cast<std::streamsize>(len));
      if (static_cast<std::uint64_t>(in.gcount()) != len) throw ParseError("truncated binary embedding file", source, 0);
      const int token = static_cast<int>(get_uint(in, 4, source));
      std::vector<float> values(static_cast<std::size_t>(s.dim_));
      for (auto& v : values) {
        const auto bits = static_cast<std::uint32_t>(get_uint(in, 4, source));
        std::memcpy(&v, &bits, sizeof v);
      }
      s.insert(doc_id, token, std::move(values));
    }
    return s;
  }
  in.clear();
  in.seekg(0);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  long long dim = 0, count = 0;
  if (!(hs >> dim >> count) || dim < 1 || count < 0) throw ParseError("bad embedding header", source, 1);
  s.dim_ = static_cast<int>(dim);
  int line_no = 1;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string doc_id;
    int token = 0;
    if (!(ls >> doc_id >> token)) throw ParseError("bad embedding record", source, line_no);
    std::vector<float> values(static_cast<std::size_t>(dim));
    for (auto& v : values) {
      if (!(ls >> v)) throw ParseError("embedding record shorter than the declared dimension", source, line_no);
    }
    s.insert(doc_id, token, std::move(values));
  }
  if (static_cast<long long>(s.records_.size()) != count) {
    throw ParseError("embedding header declares " + std::to_string(count) + " records, found " +
                         std::to_string(s.records_.size()),
                     source, line_no);
  }
  return s;
}

void EmbeddingSource::save_text(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << dim_ << ' ' << records_.size() << '\n';
  char buf[32];
  for (const auto& [key, values] : records_) {
    out << key.first << ' ' << key.second;
    for (float v : values) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

void EmbeddingSource::save_binary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kEmbeddingMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u64(out, records_.size());
  for (const auto& [key, values] : records_) {
    put_u32(out, static_cast<std::uint32_t>(key.first.size()));
    out.write(key.first.data(), static_cast<std::streamsize>(key.first.size()));
    put_u32(out, static_cast<std::uint32_t>(key.second));
    for (float v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kScoreMagic = "#tempssvm-scores";
constexpr std::string_view kCausalTag = "@causal";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string labels_field(const LabelScheme& scheme) {
  std::string s;
  for (int l = 0; l < scheme.size(); ++l) {
    if (l) s += ',';
    s += scheme.label_name(Label{l});
  }
  return s;
}

}  // namespace

void write_score_tables(std::ostream& out, const std::vector<ScoreTable>& tables,
                        const std::vector<const Document*>& docs, const LabelScheme& scheme,
                        const std::vector<Assignment>* chosen) {
  if (docs.size() != tables.size() || (chosen && chosen->size() != tables.size())) {
    throw InvariantError("score table writer given mismatched inputs");
  }
  out << kScoreMagic << " v1 scheme=" << scheme.name() << " labels=" << labels_field(scheme) << '\n';
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const ScoreTable& table = tables[t];
    const Document& doc = *docs[t];
    const auto& ev = doc.events;
    for (int p = 0; p < table.num_pairs(); ++p) {
      const auto& pr = table.pairs[static_cast<std::size_t>(p)];
      out << doc.id << '\t' << ev.at(static_cast<std::size_t>(pr.first)).id << '\t'
          << ev.at(static_cast<std::size_t>(pr.second)).id;
      for (int r = 0; r < scheme.size(); ++r) out << '\t' << format_double(table.scores(p, r));
      if (chosen) out << '\t' << scheme.label_name((*chosen)[t].labels.at(static_cast<std::size_t>(p)));
      out << '\n';
    }
    for (int p = 0; p < table.num_causal(); ++p) {
      const auto& pr = table.causal_pairs[static_cast<std::size_t>(p)];
      out << kCausalTag << '\t' << doc.id << '\t' << ev.at(static_cast<std::size_t>(pr.first)).id << '\t'
          << ev.at(static_cast<std::size_t>(pr.second)).id;
      for (int r = 0; r < kNumCausalLabels; ++r) out << '\t' << format_double(table.causal_scores(p, r));
      if (chosen) out << '\t' << scheme.causal_name((*chosen)[t].causal.at(static_cast<std::size_t>(p)));
      out << '\n';
    }
  }
}

std::vector<ScoreFileEntry> read_score_tables(std::istream& in, const std::vector<Document>& docs,
                                              const LabelScheme& scheme, const std::string& source) {
  std::string header;
  if (!std::getline(in, header) || header.rfind(kScoreMagic, 0) != 0) {
    throw ParseError("missing '#tempssvm-scores' header", source, 1);
  }
  {
    std::istringstream hs(header);
    std::string magic, version, scheme_kv, labels_kv;
    hs >> magic >> version >> scheme_kv >> labels_kv;
    if (version != "v1") throw ParseError("unsupported score file version '" + version + "'", source, 1);
    if (scheme_kv != "scheme=" + scheme.name()) {
      throw SchemeError(source + ": score file was written for " + scheme_kv + ", expected scheme=" + scheme.name());
    }
    if (labels_kv != "labels=" + labels_field(scheme)) throw SchemeError(source + ": label order differs from scheme");
  }

  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;

  struct Rows {
    std::vector<EventPair> pairs;
    std::vector<std::vector<double>> scores;
    std::vector<std::optional<std::string>> labels;
    std::vector<EventPair> cpairs;
    std::vector<std::vector<double>> cscores;
    std::vector<std::optional<std::string>> clabels;
  };
  std::vector<std::string> order;
  std::map<std::string, Rows> rows;
  std::optional<bool> with_labels;

  int line_no = 1;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    {
      std::istringstream ls(line);
      for (std::string tok; ls >> tok;) f.push_back(tok);
    }
    if (f.empty()) continue;
    const bool causal = f[0] == kCausalTag;
    const std::size_t off = causal ? 1 : 0;
    const std::size_t width = causal ? kNumCausalLabels : static_cast<std::size_t>(scheme.size());
    if (f.size() != off + 3 + width && f.size() != off + 4 + width) {
      throw ParseError("expected " + std::to_string(3 + width) + " or " + std::to_string(4 + width) + " fields",
                       source, line_no);
    }
    const bool labeled = f.size() == off + 4 + width;
    if (with_labels && *with_labels != labeled) throw ParseError("mixed score and prediction records", source, line_no);
    with_labels = labeled;

    const std::string& doc_id = f[off];
    auto d = by_id.find(doc_id);
    if (d == by_id.end()) throw DataError(source + ":" + std::to_string(line_no) + ": unknown document '" + doc_id + "'");
    const int ei = d->second->event_index(f[off + 1]);
    const int ej = d->second->event_index(f[off + 2]);
    if (ei < 0 || ej < 0) {
      throw DataError(source + ":" + std::to_string(line_no) + ": unknown event in document '" + doc_id + "'");
    }
    std::vector<double> values(width);
    for (std::size_t k = 0; k < width; ++k) {
      char* end = nullptr;
      values[k] = std::strtod(f[off + 3 + k].c_str(), &end);
      if (end == f[off + 3 + k].c_str() || *end != '\0' || !std::isfinite(values[k])) {
        throw ParseError("score '" + f[off + 3 + k] + "' is not a finite number", source, line_no);
      }
    }
    if (!rows.count(doc_id)) order.push_back(doc_id);
    Rows& r = rows[doc_id];
    std::optional<std::string> label;
    if (labeled) label = f.back();
    if (causal) {
      r.cpairs.push_back({ei, ej});
      r.cscores.push_back(std::move(values));
      r.clabels.push_back(label);
    } else {
      r.pairs.push_back({ei, ej});
      r.scores.push_back(std::move(values));
      r.labels.push_back(label);
    }
  }

  std::vector<ScoreFileEntry> out;
  for (const auto& doc_id : order) {
    const Rows& r = rows[doc_id];
    ScoreFileEntry entry;
    entry.table.doc_id = doc_id;
    entry.table.pairs = r.pairs;
    entry.table.scores.resize(static_cast<Eigen::Index>(r.pairs.size()), scheme.size());
    for (std::size_t p = 0; p < r.pairs.size(); ++p) {
      for (int k = 0; k < scheme.size(); ++k) entry.table.scores(static_cast<Eigen::Index>(p), k) = r.scores[p][static_cast<std::size_t>(k)];
    }
    entry.table.causal_pairs = r.cpairs;
    entry.table.causal_scores.resize(static_cast<Eigen::Index>(r.cpairs.size()), kNumCausalLabels);
    for (std::size_t p = 0; p < r.cpairs.size(); ++p) {
      for (int k = 0; k < kNumCausalLabels; ++k) entry.table.causal_scores(static_cast<Eigen::Index>(p), k) = r.cscores[p][static_cast<std::size_t>(k)];
    }
    if (with_labels.value_or(false)) {
      Assignment a;
      a.pairs = r.pairs;
      a.causal_pairs = r.cpairs;
      for (const auto& l : r.labels) a.labels.push_back(scheme.label(*l));
      for (const auto& l : r.clabels) a.causal.push_back(scheme.causal_label(*l));
      entry.chosen = std::move(a);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace tempssvm
