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

// Corpus records, candidate pairs, flipped-pair augmentation and the
// synthetic corpus generator.
//
// A corpus file holds one JSON object per line:
//
//   {"id": "d1", "tokens": [...], "pos": [3, 1, ...],
//    "sentences": [[0, 7], [7, 12]],
//    "events": [{"id": "e1", "token": 2, "tense": 1, "polarity": 0}, ...],
//    "relations": [["e1", "e2", "BEFORE"], ...],
//    "causal": [["e1", "e2", "CAUSES"], ...]}
//
// Sentence spans are half-open token ranges. Relations are stored in
// textual order (source token before target token).

#ifndef TEMPSSVM_CORPUS_H_
#define TEMPSSVM_CORPUS_H_

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tempssvm/label_algebra.h"
#include "tempssvm/structures.h"

namespace tempssvm {

inline constexpr int kNumTenses = 4;     // none, past, present, future
inline constexpr int kNumPolarities = 2;  // positive, negative

struct Event {
  std::string id;
  int token = 0;
  int tense = 0;
  int polarity = 0;
};

struct GoldRelation {
  int source = 0;  // event index
  int target = 0;
  Label label;
};

struct GoldCausal {
  int source = 0;
  int target = 0;
  CausalLabel label = CausalLabel::kNone;
};

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<int> pos_tags;
  std::vector<std::pair<int, int>> sentence_spans;
  std::vector<Event> events;
  std::vector<GoldRelation> relations;
  std::vector<GoldCausal> causal_relations;

  int num_events() const { return static_cast<int>(events.size()); }
  int sentence_of_token(int token) const;
  int sentence_of_event(int event) const { return sentence_of_token(events.at(event).token); }
  int event_index(std::string_view event_id) const;  // -1 when absent
};

// Checks the Document invariants; throws DataError naming the offending item.
void validate_document(const Document& doc);

Document parse_document(std::string_view json_line, const LabelScheme& scheme,
                        const std::string& source = "<corpus>", int line = 1);
std::string format_document(const Document& doc, const LabelScheme& scheme);

// Reads a line-delimited corpus. An empty file yields an empty corpus and a
// logged warning.
std::vector<Document> load_corpus(const std::filesystem::path& path, const LabelScheme& scheme);
std::vector<Document> read_corpus(std::istream& in, const LabelScheme& scheme,
                                  const std::string& source = "<corpus>");
void write_corpus(std::ostream& out, const std::vector<Document>& docs, const LabelScheme& scheme);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs,
                 const LabelScheme& scheme);

// All ordered pairs (i, j), i textually before j, whose sentences are at
// most `window` apart. Sorted by (i, j).
std::vector<EventPair> generate_candidates(const Document& doc, int window = 1);

enum class Direction { kForward, kBackward, kBoth };
Direction parse_direction(std::string_view s);
std::string_view to_string(Direction d);

// x^n, y^n and M^n for one document.
struct Instance {
  std::shared_ptr<const Document> doc;
  std::vector<EventPair> pairs;
  std::vector<Label> gold;  // empty for unlabeled input
  std::vector<EventPair> causal_pairs;
  std::vector<CausalLabel> causal_gold;

  int size() const { return static_cast<int>(pairs.size() + causal_pairs.size()); }
  bool labeled() const { return !gold.empty() || !causal_gold.empty(); }
  Assignment gold_assignment() const;
};

// Builds the forward instance of a document. Annotated documents keep the
// candidate pairs that carry a gold relation; unannotated ones keep every
// candidate. Causal pairs must coincide with a temporal candidate.
Instance make_instance(std::shared_ptr<const Document> doc, int window = 1);
std::vector<Instance> make_instances(const std::vector<Document>& docs, int window = 1);

// Adds (j, i, reverse(r)) for every (i, j, r). M doubles.
std::vector<Instance> augment_flipped(const std::vector<Instance>& instances, const LabelScheme& scheme);
Instance augment_flipped(const Instance& instance, const LabelScheme& scheme);
// Only the flipped pairs.
Instance flip_instance(const Instance& instance, const LabelScheme& scheme);
Instance with_direction(const Instance& forward, Direction d, const LabelScheme& scheme);

// ---------------------------------------------------------------------------
// Synthetic corpora.

struct SynthConfig {
  std::uint64_t seed = 1;
  int docs = 20;
  int events_per_doc = 6;
  double noise = 0.0;
  int events_per_sentence = 2;
  int cue_copies = 2;
  double pair_rate = 0.7;    // chance that an event shares its slot with the next one
  double triple_rate = 0.7;  // given a shared slot, chance that it holds three events
  double causal_rate = 0.3;  // chance that a pair carries a causal variable (causal schemes only)
};

struct EventTime {
  int start = 0;
  int end = 0;
};

struct SyntheticCorpus {
  std::vector<Document> documents;
  std::vector<std::vector<EventTime>> arrangements;  // per document, per event
};

// Every document is drawn from a random interval arrangement, so its fully
// annotated gold graph is consistent by construction. Events occupy slots on
// a timeline; an event may share its slot with the next event in the text,
// and slots are shuffled so text order and time order differ. Each event is
// followed by cue tokens naming its slot, and each pair of text-adjacent
// events is separated by a connective token naming their relation. `noise`
// is the probability that any cue or connective names a random value.
SyntheticCorpus synthesize_corpus(const SynthConfig& config, const LabelScheme& scheme);

// The label whose endpoint pattern holds for (a, b), or the unconstrained
// label when none does.
Label label_for_times(const EventTime& a, const EventTime& b, const LabelScheme& scheme);

// ---------------------------------------------------------------------------
// Word vectors.

// Fixed per-token word vectors: either read from a sidecar file keyed by
// (doc id, token index) or derived from a hash of the token string.
class EmbeddingSource {
 public:
  static EmbeddingSource hashed(int dim);
  // Text or binary sidecar (detected from the first bytes).
  static EmbeddingSource load(const std::filesystem::path& path);

  bool is_hashed() const { return hashed_; }
  int dim() const { return dim_; }

  // One row per token. Throws DataError for a token missing from a sidecar.
  Mat word_vectors(const Document& doc) const;
  static Vec hashed_vector(std::string_view token, int dim);

  void insert(const std::string& doc_id, int token, std::vector<float> values);
  void save_text(const std::filesystem::path& path) const;
  void save_binary(const std::filesystem::path& path) const;

 private:
  bool hashed_ = true;
  int dim_ = 0;
  std::vector<std::pair<std::pair<std::string, int>, std::vector<float>>> records_;  // sorted by key
};

// ---------------------------------------------------------------------------
// Score-table and prediction files.
//
//   #tempssvm-scores v1 scheme=<name> labels=<L0,L1,...>
//   <doc> <event_i> <event_j> <s_0> ... <s_{|R|-1}> [<label>]
//   @causal <doc> <event_i> <event_j> <s_none> <s_causes> <s_caused_by> [<label>]
//
// Prediction files append the chosen label column.

struct ScoreFileEntry {
  ScoreTable table;
  std::optional<Assignment> chosen;  // present in prediction files
};

void write_score_tables(std::ostream& out, const std::vector<ScoreTable>& tables,
                        const std::vector<const Document*>& docs, const LabelScheme& scheme,
                        const std::vector<Assignment>* chosen = nullptr);
// Resolves event ids against `docs` (matched by doc id).
std::vector<ScoreFileEntry> read_score_tables(std::istream& in, const std::vector<Document>& docs,
                                              const LabelScheme& scheme, const std::string& source = "<scores>");

}  // namespace tempssvm

#endif  // TEMPSSVM_CORPUS_H_
