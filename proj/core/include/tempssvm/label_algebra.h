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

// Relation label schemes: the label set, the reverse-label involution, the
// interval-endpoint meaning of each label, and the composition table
// derived from those meanings.
//
// A scheme file is line oriented:
//
//   scheme dense
//   points interval            # or "start" for start-point-only schemes
//   label BEFORE end_i < start_j
//   label INCLUDES start_i < start_j ; end_j < end_i
//   label VAGUE *              # unconstrained
//   reverse BEFORE AFTER
//   causal CAUSES CAUSED_BY anchor BEFORE
//
// Blank lines and text after '#' are ignored.

#ifndef TEMPSSVM_LABEL_ALGEBRA_H_
#define TEMPSSVM_LABEL_ALGEBRA_H_

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tempssvm {

// Dense label index in [0, |R|).
struct Label {
  int index = 0;
  friend auto operator<=>(const Label&, const Label&) = default;
};

// Causal variable values. kNone means "no causal link asserted".
enum class CausalLabel : std::uint8_t { kNone = 0, kCauses = 1, kCausedBy = 2 };
inline constexpr int kNumCausalLabels = 3;

CausalLabel reverse_causal(CausalLabel c);

// Small bitset over label indices (schemes have at most 32 labels).
class LabelSet {
 public:
  constexpr LabelSet() = default;
  constexpr explicit LabelSet(std::uint32_t bits) : bits_(bits) {}

  static LabelSet full(int num_labels) {
    return LabelSet(num_labels >= 32 ? ~0u : ((1u << num_labels) - 1u));
  }
  static LabelSet single(Label l) { return LabelSet(1u << l.index); }

  bool contains(Label l) const { return (bits_ >> l.index) & 1u; }
  void insert(Label l) { bits_ |= (1u << l.index); }
  void erase(Label l) { bits_ &= ~(1u << l.index); }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  std::uint32_t bits() const { return bits_; }

  LabelSet operator|(LabelSet o) const { return LabelSet(bits_ | o.bits_); }
  LabelSet operator&(LabelSet o) const { return LabelSet(bits_ & o.bits_); }
  friend bool operator==(LabelSet, LabelSet) = default;

  // Labels in ascending index order.
  std::vector<Label> labels() const;

 private:
  std::uint32_t bits_ = 0;
};

// Interval endpoint of the first (i) or second (j) argument of a relation.
struct Endpoint {
  enum class Arg : std::uint8_t { kI, kJ };
  enum class Kind : std::uint8_t { kStart, kEnd };
  Arg arg;
  Kind kind;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

enum class PointOp : std::uint8_t { kLess, kLessEq, kEqual, kGreaterEq, kGreater };

// One comparison between two endpoints, e.g. end_i < start_j.
struct EndpointAtom {
  Endpoint lhs;
  PointOp op;
  Endpoint rhs;
};

// Conjunction of atoms. An empty pattern is unconstrained (VAGUE).
struct EndpointPattern {
  std::vector<EndpointAtom> atoms;
  bool unconstrained() const { return atoms.empty(); }
};

enum class PointModel : std::uint8_t {
  kInterval,  // each event has start < end
  kStart,     // each event is a single start point
};

struct CausalSpec {
  std::string causes;     // e.g. CAUSES
  std::string caused_by;  // e.g. CAUSED_BY
  Label anchor;           // temporal label implied by CAUSES, e.g. BEFORE
};

class LabelScheme;

// Trans(r1, r2): labels admissible on (i,k) given r1 on (i,j) and r2 on (j,k).
class CompositionTable {
 public:
  CompositionTable() = default;
  CompositionTable(int num_labels, std::vector<LabelSet> entries);

  LabelSet compose(Label r1, Label r2) const {
    return entries_[static_cast<std::size_t>(r1.index * num_labels_ + r2.index)];
  }
  // True when the entry is the full label set and so constrains nothing.
  bool vacuous(Label r1, Label r2) const {
    return compose(r1, r2) == LabelSet::full(num_labels_);
  }
  int num_labels() const { return num_labels_; }

 private:
  int num_labels_ = 0;
  std::vector<LabelSet> entries_;  // row-major num_labels x num_labels
};

class LabelScheme {
 public:
  struct LabelDef {
    std::string name;
    EndpointPattern pattern;
  };

  // Builds and validates a scheme; also derives its composition table.
  // Throws SchemeError on any inconsistency.
  LabelScheme(std::string name, PointModel points, std::vector<LabelDef> labels,
              std::vector<std::pair<std::string, std::string>> reverse_pairs,
              std::optional<CausalSpec> causal);

  static LabelScheme parse(std::string_view text, const std::string& source = "<scheme>");
  static LabelScheme load(const std::filesystem::path& path);
  // The two schemes that ship as data files, also compiled in.
  static LabelScheme dense();
  static LabelScheme start_point();

  const std::string& name() const { return name_; }
  PointModel points() const { return points_; }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<LabelDef>& labels() const { return labels_; }
  const std::string& label_name(Label l) const;
  const EndpointPattern& pattern(Label l) const { return labels_.at(l.index).pattern; }

  // Throws SchemeError for names not in the scheme.
  Label label(std::string_view name) const;
  std::optional<Label> find(std::string_view name) const;

  Label reverse(Label l) const { return Label{reverse_.at(l.index)}; }
  // Name-level reverse over temporal and causal labels.
  std::string reverse_label(std::string_view name) const;

  // The unconstrained label, if the scheme declares one.
  std::optional<Label> vague() const { return vague_; }
  LabelSet full() const { return LabelSet::full(size()); }

  const std::optional<CausalSpec>& causal() const { return causal_; }
  bool has_causal() const { return causal_.has_value(); }
  const std::string& causal_name(CausalLabel c) const;
  CausalLabel causal_label(std::string_view name) const;

  const CompositionTable& composition() const { return table_; }
  LabelSet compose(Label r1, Label r2) const { return table_.compose(r1, r2); }

 private:
  std::string name_;
  PointModel points_;
  std::vector<LabelDef> labels_;
  std::vector<int> reverse_;
  std::optional<Label> vague_;
  std::optional<CausalSpec> causal_;
  std::vector<std::string> causal_names_;
  CompositionTable table_;
};

// Derives Trans(r1, r2) for every label pair by point-algebra path
// consistency over the endpoints of three events. A consequent label is
// admitted when the joint network is consistent; the unconstrained label is
// admitted when some arrangement matches no constrained label, or when more
// than one constrained label is admissible.
CompositionTable build_composition_table(const LabelScheme& scheme);

std::string_view to_string(PointOp op);

// Evaluates a pattern on concrete endpoint values of (i, j). Start-point
// schemes ignore the end values.
bool pattern_holds(const EndpointPattern& pattern, int start_i, int end_i, int start_j, int end_j);

}  // namespace tempssvm

#endif  // TEMPSSVM_LABEL_ALGEBRA_H_
