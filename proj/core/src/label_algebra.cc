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

#include "tempssvm/label_algebra.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "tempssvm/error.h"

namespace tempssvm {

namespace {

// Point relations as bitmasks over the basic relations {<, =, >}.
using PointRel = std::uint8_t;
constexpr PointRel kLt = 1;
constexpr PointRel kEq = 2;
constexpr PointRel kGt = 4;
constexpr PointRel kAll = kLt | kEq | kGt;

PointRel converse(PointRel r) {
  return static_cast<PointRel>((r & kEq) | ((r & kLt) ? kGt : 0) | ((r & kGt) ? kLt : 0));
}

PointRel compose_basic(PointRel a, PointRel b) {
  if (a == kEq) return b;
  if (b == kEq) return a;
  if (a == b) return a;
  return kAll;
}

PointRel compose(PointRel a, PointRel b) {
  PointRel out = 0;
  for (PointRel x : {kLt, kEq, kGt}) {
    if (!(a & x)) continue;
    for (PointRel y : {kLt, kEq, kGt}) {
      if (b & y) out |= compose_basic(x, y);
    }
  }
  return out;
}

PointRel to_rel(PointOp op) {
  switch (op) {
    case PointOp::kLess: return kLt;
    case PointOp::kLessEq: return kLt | kEq;
    case PointOp::kEqual: return kEq;
    case PointOp::kGreaterEq: return kGt | kEq;
    case PointOp::kGreater: return kGt;
  }
  return kAll;
}

// Network over the endpoints of three events (0, 1, 2).
class PointNetwork {
 public:
  explicit PointNetwork(PointModel model)
      : model_(model), size_(model == PointModel::kInterval ? 6 : 3) {
    for (int p = 0; p < size_; ++p) {
      for (int q = 0; q < size_; ++q) rel_[p][q] = (p == q) ? kEq : kAll;
    }
    if (model_ == PointModel::kInterval) {
      for (int e = 0; e < 3; ++e) restrict(index(e, Endpoint::Kind::kStart), index(e, Endpoint::Kind::kEnd), kLt);
    }
  }

  int index(int event, Endpoint::Kind kind) const {
    if (model_ == PointModel::kStart) return event;
    return event * 2 + (kind == Endpoint::Kind::kEnd ? 1 : 0);
  }

  void restrict(int p, int q, PointRel r) {
    rel_[p][q] &= r;
    rel_[q][p] &= converse(r);
  }

  // Places an atom of a relation on (first, second) onto this network.
  void add(const EndpointAtom& atom, int first, int second, PointRel rel) {
    auto place = [&](const Endpoint& e) {
      return index(e.arg == Endpoint::Arg::kI ? first : second, e.kind);
    };
    restrict(place(atom.lhs), place(atom.rhs), rel);
  }

  void add(const EndpointPattern& pattern, int first, int second) {
    for (const auto& atom : pattern.atoms) add(atom, first, second, to_rel(atom.op));
  }

  // Path consistency; decides consistency for the convex point algebra.
  bool consistent() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int m = 0; m < size_; ++m) {
        for (int p = 0; p < size_; ++p) {
          for (int q = 0; q < size_; ++q) {
            const PointRel next = rel_[p][q] & compose(rel_[p][m], rel_[m][q]);
            if (next == 0) return false;
            if (next != rel_[p][q]) {
              rel_[p][q] = next;
              rel_[q][p] = converse(next);
              changed = true;
            }
          }
        }
      }
    }
    return true;
  }

 private:
  PointModel model_;
  int size_;
  std::array<std::array<PointRel, 6>, 6> rel_{};
};

// Negating an atom gives a disjunction of convex relations.
std::vector<PointRel> negations(PointOp op) {
  switch (op) {
    case PointOp::kLess: return {kEq | kGt};
    case PointOp::kLessEq: return {kGt};
    case PointOp::kEqual: return {kLt, kGt};
    case PointOp::kGreaterEq: return {kLt};
    case PointOp::kGreater: return {kLt | kEq};
  }
  return {};
}

// Is there an arrangement with r1 on (0,1), r2 on (1,2) and no constrained
// label on (0,2)? Each constrained label must have one atom falsified; the
// choices are enumerated and checked with path consistency.
bool no_definite_label_realizable(const LabelScheme& scheme, const PointNetwork& base,
                                  const std::vector<Label>& definite, std::size_t depth,
                                  PointNetwork net) {
  if (depth == definite.size()) return net.consistent();
  const auto& atoms = scheme.pattern(definite[depth]).atoms;
  for (const auto& atom : atoms) {
    for (PointRel neg : negations(atom.op)) {
      PointNetwork next = net;
      next.add(atom, 0, 2, neg);
      if (!next.consistent()) continue;
      if (no_definite_label_realizable(scheme, base, definite, depth + 1, next)) return true;
    }
  }
  return false;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

Endpoint parse_endpoint(const std::string& tok, const std::string& source, int line) {
  static const std::array<std::pair<const char*, Endpoint>, 4> kNames = {{
      {"start_i", {Endpoint::Arg::kI, Endpoint::Kind::kStart}},
      {"end_i", {Endpoint::Arg::kI, Endpoint::Kind::kEnd}},
      {"start_j", {Endpoint::Arg::kJ, Endpoint::Kind::kStart}},
      {"end_j", {Endpoint::Arg::kJ, Endpoint::Kind::kEnd}},
  }};
  for (const auto& [name, ep] : kNames) {
    if (tok == name) return ep;
  }
  throw ParseError("unknown endpoint '" + tok + "'", source, line);
}

PointOp parse_op(const std::string& tok, const std::string& source, int line) {
  if (tok == "<") return PointOp::kLess;
  if (tok == "<=") return PointOp::kLessEq;
  if (tok == "=") return PointOp::kEqual;
  if (tok == ">=") return PointOp::kGreaterEq;
  if (tok == ">") return PointOp::kGreater;
  throw ParseError("unknown comparison '" + tok + "'", source, line);
}

EndpointPattern parse_pattern(const std::vector<std::string>& toks, std::size_t from,
                              const std::string& source, int line) {
  EndpointPattern pattern;
  if (toks.size() == from + 1 && toks[from] == "*") return pattern;
  std::size_t i = from;
  while (i < toks.size()) {
    if (i + 3 > toks.size()) throw ParseError("incomplete endpoint comparison", source, line);
    pattern.atoms.push_back({parse_endpoint(toks[i], source, line), parse_op(toks[i + 1], source, line),
                             parse_endpoint(toks[i + 2], source, line)});
    i += 3;
    if (i < toks.size()) {
      if (toks[i] != ";") throw ParseError("expected ';' between comparisons", source, line);
      ++i;
    }
  }
  if (pattern.atoms.empty()) throw ParseError("label without endpoint pattern", source, line);
  return pattern;
}

// Endpoint values for two events under the scheme's point model.
bool holds(const EndpointPattern& pattern, const std::array<int, 4>& v, bool swapped) {
  auto value = [&](const Endpoint& e) {
    const bool first = (e.arg == Endpoint::Arg::kI) != swapped;
    return v[(first ? 0 : 2) + (e.kind == Endpoint::Kind::kEnd ? 1 : 0)];
  };
  for (const auto& a : pattern.atoms) {
    const int l = value(a.lhs);
    const int r = value(a.rhs);
    bool ok = false;
    switch (a.op) {
      case PointOp::kLess: ok = l < r; break;
      case PointOp::kLessEq: ok = l <= r; break;
      case PointOp::kEqual: ok = l == r; break;
      case PointOp::kGreaterEq: ok = l >= r; break;
      case PointOp::kGreater: ok = l > r; break;
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(PointOp op) {
  switch (op) {
    case PointOp::kLess: return "<";
    case PointOp::kLessEq: return "<=";
    case PointOp::kEqual: return "=";
    case PointOp::kGreaterEq: return ">=";
    case PointOp::kGreater: return ">";
  }
  return "?";
}

bool pattern_holds(const EndpointPattern& pattern, int start_i, int end_i, int start_j, int end_j) {
  return holds(pattern, {start_i, end_i, start_j, end_j}, false);
}

CausalLabel reverse_causal(CausalLabel c) {
  switch (c) {
    case CausalLabel::kCauses: return CausalLabel::kCausedBy;
    case CausalLabel::kCausedBy: return CausalLabel::kCauses;
    case CausalLabel::kNone: return CausalLabel::kNone;
  }
  return c;
}

std::vector<Label> LabelSet::labels() const {
  std::vector<Label> out;
  for (int i = 0; i < 32; ++i) {
    if ((bits_ >> i) & 1u) out.push_back(Label{i});
  }
  return out;
}

CompositionTable::CompositionTable(int num_labels, std::vector<LabelSet> entries)
    : num_labels_(num_labels), entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(num_labels * num_labels)) {
    throw SchemeError("composition table has wrong number of entries");
  }
}

LabelScheme::LabelScheme(std::string name, PointModel points, std::vector<LabelDef> labels,
                         std::vector<std::pair<std::string, std::string>> reverse_pairs,
                         std::optional<CausalSpec> causal)
    : name_(std::move(name)), points_(points), labels_(std::move(labels)), causal_(std::move(causal)) {
  if (name_.empty()) throw SchemeError("scheme without a name");
  if (labels_.empty()) throw SchemeError("scheme '" + name_ + "' declares no labels");
  if (labels_.size() > 32) throw SchemeError("scheme '" + name_ + "' has more than 32 labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i].name == labels_[j].name) throw SchemeError("duplicate label '" + labels_[i].name + "'");
    }
    if (labels_[i].pattern.unconstrained()) {
      if (vague_) throw SchemeError("scheme '" + name_ + "' declares more than one unconstrained label");
      vague_ = Label{static_cast<int>(i)};
    }
    if (points_ == PointModel::kStart) {
      for (const auto& atom : labels_[i].pattern.atoms) {
        if (atom.lhs.kind == Endpoint::Kind::kEnd || atom.rhs.kind == Endpoint::Kind::kEnd) {
          throw SchemeError("label '" + labels_[i].name + "' uses an end point in a start-point scheme");
        }
      }
    }
  }

  reverse_.assign(labels_.size(), -1);
  for (const auto& [a, b] : reverse_pairs) {
    const int ia = label(a).index;
    const int ib = label(b).index;
    if ((reverse_[ia] != -1 && reverse_[ia] != ib) || (reverse_[ib] != -1 && reverse_[ib] != ia)) {
      throw SchemeError("conflicting reverse declarations for '" + a + "' / '" + b + "'");
    }
    reverse_[ia] = ib;
    reverse_[ib] = ia;
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (reverse_[i] == -1) throw SchemeError("label '" + labels_[i].name + "' has no reverse declaration");
  }

  // The reverse of a label must mean the same thing with arguments swapped.
  const int hi = points_ == PointModel::kInterval ? 4 : 2;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    const auto& fwd = labels_[l].pattern;
    const auto& rev = labels_[static_cast<std::size_t>(reverse_[l])].pattern;
    for (int a = 0; a < hi; ++a) {
      for (int b = 0; b < hi; ++b) {
        for (int c = 0; c < hi; ++c) {
          for (int d = 0; d < hi; ++d) {
            std::array<int, 4> v{a, b, c, d};
            if (points_ == PointModel::kInterval) {
              if (a >= b || c >= d) continue;
            } else if (b != 0 || d != 0) {
              continue;
            }
            if (holds(fwd, v, false) != holds(rev, v, true)) {
              throw SchemeError("reverse of '" + labels_[l].name + "' is not its argument swap");
            }
          }
        }
      }
    }
  }

  if (causal_) {
    if (causal_->causes.empty() || causal_->caused_by.empty() || causal_->causes == causal_->caused_by) {
      throw SchemeError("causal declaration needs two distinct label names");
    }
    for (const auto& n : {causal_->causes, causal_->caused_by}) {
      if (find(n)) throw SchemeError("causal label '" + n + "' clashes with a temporal label");
    }
    if (causal_->anchor.index < 0 || causal_->anchor.index >= size()) {
      throw SchemeError("causal anchor is not a temporal label");
    }
    causal_names_ = {"NONE", causal_->causes, causal_->caused_by};
  }

  table_ = build_composition_table(*this);
}

const std::string& LabelScheme::label_name(Label l) const {
  if (l.index < 0 || l.index >= size()) throw SchemeError("label index " + std::to_string(l.index) + " out of range");
  return labels_[static_cast<std::size_t>(l.index)].name;
}

std::optional<Label> LabelScheme::find(std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].name == name) return Label{static_cast<int>(i)};
  }
  return std::nullopt;
}

Label LabelScheme::label(std::string_view name) const {
  if (auto l = find(name)) return *l;
  throw SchemeError("unknown label '" + std::string(name) + "' in scheme '" + name_ + "'");
}

std::string LabelScheme::reverse_label(std::string_view name) const {
  if (auto l = find(name)) return label_name(reverse(*l));
  if (causal_) {
    if (name == causal_->causes) return causal_->caused_by;
    if (name == causal_->caused_by) return causal_->causes;
  }
  throw SchemeError("unknown label '" + std::string(name) + "' in scheme '" + name_ + "'");
}

const std::string& LabelScheme::causal_name(CausalLabel c) const {
  if (!causal_) throw SchemeError("scheme '" + name_ + "' declares no causal labels");
  return causal_names_.at(static_cast<std::size_t>(c));
}

CausalLabel LabelScheme::causal_label(std::string_view name) const {
  if (!causal_) throw SchemeError("scheme '" + name_ + "' declares no causal labels");
  for (int i = 0; i < kNumCausalLabels; ++i) {
    if (causal_names_[static_cast<std::size_t>(i)] == name) return static_cast<CausalLabel>(i);
  }
  throw SchemeError("unknown causal label '" + std::string(name) + "'");
}

LabelScheme LabelScheme::parse(std::string_view text, const std::string& source) {
  std::string name;
  PointModel points = PointModel::kInterval;
  std::vector<LabelDef> labels;
  std::vector<std::pair<std::string, std::string>> reverse_pairs;
  std::optional<std::array<std::string, 3>> causal_names;

  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    const std::string& key = toks[0];
    if (key == "scheme") {
      if (toks.size() != 2) throw ParseError("expected 'scheme <name>'", source, line_no);
      name = toks[1];
    } else if (key == "points") {
      if (toks.size() != 2) throw ParseError("expected 'points interval|start'", source, line_no);
      if (toks[1] == "interval") {
        points = PointModel::kInterval;
      } else if (toks[1] == "start") {
        points = PointModel::kStart;
      } else {
        throw ParseError("unknown point model '" + toks[1] + "'", source, line_no);
      }
    } else if (key == "label") {
      if (toks.size() < 3) throw ParseError("expected 'label <NAME> <pattern>'", source, line_no);
      labels.push_back({toks[1], parse_pattern(toks, 2, source, line_no)});
    } else if (key == "reverse") {
      if (toks.size() != 3) throw ParseError("expected 'reverse <A> <B>'", source, line_no);
      reverse_pairs.emplace_back(toks[1], toks[2]);
    } else if (key == "causal") {
      if (toks.size() != 5 || toks[3] != "anchor") {
        throw ParseError("expected 'causal <CAUSES> <CAUSED_BY> anchor <LABEL>'", source, line_no);
      }
      causal_names = std::array<std::string, 3>{toks[1], toks[2], toks[4]};
    } else {
      throw ParseError("unknown directive '" + key + "'", source, line_no);
    }
  }

  std::optional<CausalSpec> causal;
  if (causal_names) {
    const auto& n = *causal_names;
    auto it = std::find_if(labels.begin(), labels.end(), [&](const LabelDef& d) { return d.name == n[2]; });
    if (it == labels.end()) throw SchemeError("causal anchor '" + n[2] + "' is not a declared label");
    causal = CausalSpec{n[0], n[1], Label{static_cast<int>(it - labels.begin())}};
  }
  return LabelScheme(name, points, std::move(labels), std::move(reverse_pairs), std::move(causal));
}

LabelScheme LabelScheme::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemeError("cannot open scheme file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

LabelScheme LabelScheme::dense() {
  return parse(R"(
scheme dense
points interval
label BEFORE        end_i < start_j
label AFTER         end_j < start_i
label INCLUDES      start_i < start_j ; end_j < end_i
label IS_INCLUDED   start_j < start_i ; end_i < end_j
label SIMULTANEOUS  start_i = start_j ; end_i = end_j
label VAGUE         *
reverse BEFORE AFTER
reverse INCLUDES IS_INCLUDED
reverse SIMULTANEOUS SIMULTANEOUS
reverse VAGUE VAGUE
)",
               "<builtin:dense>");
}

LabelScheme LabelScheme::start_point() {
  return parse(R"(
scheme start_point
points start
label BEFORE        start_i < start_j
label AFTER         start_j < start_i
label SIMULTANEOUS  start_i = start_j
label VAGUE         *
reverse BEFORE AFTER
reverse SIMULTANEOUS SIMULTANEOUS
reverse VAGUE VAGUE
causal CAUSES CAUSED_BY anchor BEFORE
)",
               "<builtin:start_point>");
}

CompositionTable build_composition_table(const LabelScheme& scheme) {
  const int n = scheme.size();
  std::vector<Label> definite;
  for (int l = 0; l < n; ++l) {
    if (!scheme.pattern(Label{l}).unconstrained()) definite.push_back(Label{l});
  }

  std::vector<LabelSet> entries;
  entries.reserve(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      PointNetwork base(scheme.points());
      base.add(scheme.pattern(Label{a}), 0, 1);
      base.add(scheme.pattern(Label{b}), 1, 2);
      LabelSet out;
      if (!base.consistent()) {
        throw SchemeError("labels '" + scheme.label_name(Label{a}) + "' and '" + scheme.label_name(Label{b}) +
                          "' cannot be chained; check their endpoint patterns");
      }
      for (Label c : definite) {
        PointNetwork net = base;
        net.add(scheme.pattern(c), 0, 2);
        if (net.consistent()) out.insert(c);
      }
      if (auto vague = scheme.vague()) {
        if (out.size() > 1 || no_definite_label_realizable(scheme, base, definite, 0, base)) out.insert(*vague);
      }
      if (out.empty()) {
        throw SchemeError("composition of '" + scheme.label_name(Label{a}) + "' and '" +
                          scheme.label_name(Label{b}) + "' admits no label");
      }
      entries.push_back(out);
    }
  }
  return CompositionTable(n, std::move(entries));
}

}  // namespace tempssvm
