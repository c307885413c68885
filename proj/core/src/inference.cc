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

#include "tempssvm/inference.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "tempssvm/error.h"

namespace tempssvm {

namespace {

using Mask = std::uint32_t;

constexpr Mask bit(int l) { return Mask{1} << l; }

std::map<EventPair, int> index_pairs(const std::vector<EventPair>& pairs, const char* what) {
  std::map<EventPair, int> index;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (pairs[p].first == pairs[p].second) {
      throw DataError(std::string(what) + " pair relates event " + std::to_string(pairs[p].first) + " to itself");
    }
    if (!index.emplace(pairs[p], static_cast<int>(p)).second) {
      throw DataError(std::string("duplicate ") + what + " pair (" + std::to_string(pairs[p].first) + ", " +
                      std::to_string(pairs[p].second) + ")");
    }
  }
  return index;
}

// Calls fn(ij, jk, ik) for every ordered event triple whose three pairs are
// all present.
template <typename Fn>
void for_each_triple(const std::vector<EventPair>& pairs, const std::map<EventPair, int>& index, Fn&& fn) {
  std::map<int, std::vector<int>> by_first;
  for (std::size_t p = 0; p < pairs.size(); ++p) by_first[pairs[p].first].push_back(static_cast<int>(p));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    auto it = by_first.find(j);
    if (it == by_first.end()) continue;
    for (int q : it->second) {
      const int k = pairs[static_cast<std::size_t>(q)].second;
      if (k == i) continue;
      auto ik = index.find({i, k});
      if (ik != index.end()) fn(static_cast<int>(p), q, ik->second);
    }
  }
}

double tie_threshold(double best) { return best - kTieTolerance * std::max(1.0, std::abs(best)); }

// Objective in canonical order: temporal pairs, then causal pairs.
double canonical_objective(const ScoreTable& scores, const std::vector<int>& labels) {
  double total = 0.0;
  const int m = scores.num_pairs();
  for (int p = 0; p < m; ++p) total += scores.scores(p, labels[static_cast<std::size_t>(p)]);
  for (int q = 0; q < scores.num_causal(); ++q) total += scores.causal_scores(q, labels[static_cast<std::size_t>(m + q)]);
  return total;
}

void check_scores(const ScoreTable& scores, int num_labels) {
  if (scores.scores.rows() != scores.num_pairs() ||
      (scores.num_pairs() > 0 && scores.scores.cols() != num_labels)) {
    throw DataError("score table for '" + scores.doc_id + "' does not match the scheme's label count");
  }
  if (scores.causal_scores.rows() != scores.num_causal() ||
      (scores.num_causal() > 0 && scores.causal_scores.cols() != kNumCausalLabels)) {
    throw DataError("causal score table for '" + scores.doc_id + "' has the wrong shape");
  }
  if (!scores.scores.allFinite() || !scores.causal_scores.allFinite()) {
    throw DataError("score table for '" + scores.doc_id + "' contains non-finite values");
  }
}

// A set of variables with their constraints, re-indexed locally.
class Problem {
 public:
  Problem(const ConstraintSet& cs, const ScoreTable& scores, const std::vector<int>& vars) : vars_(vars) {
    const int m = cs.num_pairs();
    const int r = cs.num_labels();
    std::vector<int> local(static_cast<std::size_t>(cs.num_vars()), -1);
    for (std::size_t k = 0; k < vars.size(); ++k) local[static_cast<std::size_t>(vars[k])] = static_cast<int>(k);
    for (int v : vars) {
      std::vector<double> row;
      if (v < m) {
        for (int l = 0; l < r; ++l) row.push_back(scores.scores(v, l));
      } else {
        for (int l = 0; l < kNumCausalLabels; ++l) row.push_back(scores.causal_scores(v - m, l));
      }
      full_.push_back(static_cast<Mask>((Mask{1} << row.size()) - 1));
      score_.push_back(std::move(row));
    }
    watch_.resize(vars.size());
    for (const auto& b : cs.binaries()) {
      const int a = local[static_cast<std::size_t>(b.a)];
      const int c = local[static_cast<std::size_t>(b.b)];
      if (a < 0 || c < 0) continue;
      const int id = static_cast<int>(bins_.size());
      bins_.push_back({a, c, &b.support_ab, &b.support_ba});
      watch_[static_cast<std::size_t>(a)].push_back(id);
      watch_[static_cast<std::size_t>(c)].push_back(id);
    }
    for (const auto& t : cs.triples()) {
      const int x = local[static_cast<std::size_t>(t.ij)];
      const int y = local[static_cast<std::size_t>(t.jk)];
      const int z = local[static_cast<std::size_t>(t.ik)];
      if (x < 0 || y < 0 || z < 0) continue;
      const int id = kTripleBase + static_cast<int>(tris_.size());
      tris_.push_back({x, y, z});
      watch_[static_cast<std::size_t>(x)].push_back(id);
      watch_[static_cast<std::size_t>(y)].push_back(id);
      watch_[static_cast<std::size_t>(z)].push_back(id);
    }
    trans_.resize(static_cast<std::size_t>(r * r));
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) trans_[static_cast<std::size_t>(a * r + b)] = cs.composition().compose({a}, {b}).bits();
    }
    r_ = r;
    in_queue_.assign(bins_.size() + tris_.size(), 0);
  }

  int size() const { return static_cast<int>(score_.size()); }
  const std::vector<Mask>& full() const { return full_; }

  // Runs both search phases and returns local labels.
  std::vector<int> solve(std::int64_t node_limit, std::int64_t& nodes) {
    node_limit_ = node_limit;
    nodes_ = 0;
    std::vector<Mask> root = full_;
    std::vector<int> all(static_cast<std::size_t>(size()));
    std::iota(all.begin(), all.end(), 0);
    if (!propagate(root, all)) throw SolverError("constraint set is infeasible");
    best_ = -std::numeric_limits<double>::infinity();
    maximize(root);
    if (best_labels_.empty()) throw SolverError("constraint set is infeasible");
    target_ = tie_threshold(best_);
    found_.clear();
    if (!first_at_least(root)) throw SolverError("tie-break search lost the optimum");
    nodes += nodes_;
    return found_;
  }

 private:
  struct Bin {
    int a, b;
    const std::vector<Mask>* ab;
    const std::vector<Mask>* ba;
  };
  struct Tri {
    int x, y, z;
  };
  static constexpr int kTripleBase = 1 << 28;

  double max_in(int v, Mask d) const {
    double best = -std::numeric_limits<double>::infinity();
    const auto& row = score_[static_cast<std::size_t>(v)];
    for (Mask m = d; m; m &= m - 1) best = std::max(best, row[static_cast<std::size_t>(std::countr_zero(m))]);
    return best;
  }

  double bound(const std::vector<Mask>& d) const {
    double total = 0.0;
    for (int v = 0; v < size(); ++v) total += max_in(v, d[static_cast<std::size_t>(v)]);
    return total;
  }

  double objective(const std::vector<Mask>& d) const {
    double total = 0.0;
    for (int v = 0; v < size(); ++v) {
      total += score_[static_cast<std::size_t>(v)][static_cast<std::size_t>(std::countr_zero(d[static_cast<std::size_t>(v)]))];
    }
    return total;
  }

  void count_node() {
    if (++nodes_ > node_limit_) throw SolverError("branch and bound exceeded its node limit");
  }

  bool revise(int id, std::vector<Mask>& d, std::vector<int>& changed) {
    auto update = [&](int v, Mask nv) {
      Mask& cur = d[static_cast<std::size_t>(v)];
      if (nv != cur) {
        cur = nv;
        changed.push_back(v);
      }
      return nv != 0;
    };
    if (id < kTripleBase) {
      const Bin& b = bins_[static_cast<std::size_t>(id)];
      Mask nb = 0;
      for (Mask m = d[static_cast<std::size_t>(b.a)]; m; m &= m - 1) nb |= (*b.ab)[static_cast<std::size_t>(std::countr_zero(m))];
      if (!update(b.b, d[static_cast<std::size_t>(b.b)] & nb)) return false;
      Mask na = 0;
      for (Mask m = d[static_cast<std::size_t>(b.b)]; m; m &= m - 1) na |= (*b.ba)[static_cast<std::size_t>(std::countr_zero(m))];
      return update(b.a, d[static_cast<std::size_t>(b.a)] & na);
    }
    const Tri& t = tris_[static_cast<std::size_t>(id - kTripleBase)];
    const Mask dz = d[static_cast<std::size_t>(t.z)];
    Mask nx = 0, ny = 0, nz = 0;
    for (Mask mx = d[static_cast<std::size_t>(t.x)]; mx; mx &= mx - 1) {
      const int r1 = std::countr_zero(mx);
      for (Mask my = d[static_cast<std::size_t>(t.y)]; my; my &= my - 1) {
        const int r2 = std::countr_zero(my);
        const Mask allowed = trans_[static_cast<std::size_t>(r1 * r_ + r2)] & dz;
        if (allowed) {
          nx |= bit(r1);
          ny |= bit(r2);
          nz |= allowed;
        }
      }
    }
    return update(t.x, nx) && update(t.y, ny) && update(t.z, nz);
  }

  bool propagate(std::vector<Mask>& d, const std::vector<int>& seeds) {
    std::vector<int> queue;
    auto push_var = [&](int v) {
      for (int id : watch_[static_cast<std::size_t>(v)]) {
        const std::size_t slot = id < kTripleBase ? static_cast<std::size_t>(id) : bins_.size() + static_cast<std::size_t>(id - kTripleBase);
        if (!in_queue_[slot]) {
          in_queue_[slot] = 1;
          queue.push_back(id);
        }
      }
    };
    for (int v : seeds) push_var(v);
    std::vector<int> changed;
    bool ok = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int id = queue[head];
      const std::size_t slot = id < kTripleBase ? static_cast<std::size_t>(id) : bins_.size() + static_cast<std::size_t>(id - kTripleBase);
      in_queue_[slot] = 0;
      if (!ok) continue;
      changed.clear();
      if (!revise(id, d, changed)) {
        ok = false;
        continue;
      }
      for (int v : changed) push_var(v);
    }
    return ok;
  }

  // Phase one: the optimal value, branching on the tightest variable.
  void maximize(const std::vector<Mask>& d) {
    count_node();
    const double ub = bound(d);
    if (ub <= best_ + 1e-12 * std::max(1.0, std::abs(best_))) return;
    int var = -1;
    double margin = std::numeric_limits<double>::infinity();
    for (int v = 0; v < size(); ++v) {
      const Mask m = d[static_cast<std::size_t>(v)];
      if (std::popcount(m) < 2) continue;
      double first = -std::numeric_limits<double>::infinity(), second = first;
      for (Mask k = m; k; k &= k - 1) {
        const double s = score_[static_cast<std::size_t>(v)][static_cast<std::size_t>(std::countr_zero(k))];
        if (s > first) {
          second = first;
          first = s;
        } else if (s > second) {
          second = s;
        }
      }
      if (first - second < margin) {
        margin = first - second;
        var = v;
      }
    }
    if (var < 0) {
      const double obj = objective(d);
      if (obj > best_) {
        best_ = obj;
        best_labels_.assign(d.begin(), d.end());
      }
      return;
    }
    std::vector<int> values;
    for (Mask k = d[static_cast<std::size_t>(var)]; k; k &= k - 1) values.push_back(std::countr_zero(k));
    const auto& row = score_[static_cast<std::size_t>(var)];
    std::stable_sort(values.begin(), values.end(), [&](int a, int b) {
      return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
    });
    for (int l : values) {
      std::vector<Mask> next = d;
      next[static_cast<std::size_t>(var)] = bit(l);
      if (propagate(next, {var})) maximize(next);
    }
  }

  // Phase two: the lexicographically first assignment within the tie
  // tolerance of the optimum.
  bool first_at_least(const std::vector<Mask>& d) {
    count_node();
    if (bound(d) < target_ - 1e-12 * std::max(1.0, std::abs(target_))) return false;
    int var = -1;
    for (int v = 0; v < size(); ++v) {
      if (std::popcount(d[static_cast<std::size_t>(v)]) > 1) {
        var = v;
        break;
      }
    }
    if (var < 0) {
      if (objective(d) < target_) return false;
      for (Mask m : d) found_.push_back(std::countr_zero(m));
      return true;
    }
    for (Mask k = d[static_cast<std::size_t>(var)]; k; k &= k - 1) {
      std::vector<Mask> next = d;
      next[static_cast<std::size_t>(var)] = bit(std::countr_zero(k));
      if (propagate(next, {var}) && first_at_least(next)) return true;
    }
    return false;
  }

  std::vector<int> vars_;
  std::vector<std::vector<double>> score_;
  std::vector<Mask> full_;
  std::vector<Bin> bins_;
  std::vector<Tri> tris_;
  std::vector<std::vector<int>> watch_;
  std::vector<Mask> trans_;
  std::vector<char> in_queue_;
  int r_ = 0;
  std::int64_t node_limit_ = 0;
  std::int64_t nodes_ = 0;
  double best_ = 0.0;
  std::vector<Mask> best_labels_;
  double target_ = 0.0;
  std::vector<int> found_;
};

Assignment to_assignment(const ScoreTable& scores, const std::vector<int>& labels) {
  Assignment a;
  a.pairs = scores.pairs;
  a.causal_pairs = scores.causal_pairs;
  const int m = scores.num_pairs();
  for (int p = 0; p < m; ++p) a.labels.push_back(Label{labels[static_cast<std::size_t>(p)]});
  for (int q = 0; q < scores.num_causal(); ++q) {
    a.causal.push_back(static_cast<CausalLabel>(labels[static_cast<std::size_t>(m + q)]));
  }
  a.objective = canonical_objective(scores, labels);
  return a;
}

std::string pair_text(EventPair p) { return "(" + std::to_string(p.first) + ", " + std::to_string(p.second) + ")"; }

}  // namespace

// ---------------------------------------------------------------------------

ConstraintSet ConstraintSet::build(const std::vector<EventPair>& pairs, const std::vector<EventPair>& causal_pairs,
                                   const LabelScheme& scheme, ConstraintFlags flags) {
  ConstraintSet cs;
  cs.flags_ = flags;
  cs.num_pairs_ = static_cast<int>(pairs.size());
  cs.num_causal_ = static_cast<int>(causal_pairs.size());
  cs.num_labels_ = scheme.size();
  cs.composition_ = scheme.composition();
  const int r = scheme.size();
  const auto index = index_pairs(pairs, "candidate");
  const auto causal_index = index_pairs(causal_pairs, "causal");

  if (flags.symmetry) {
    Binary proto;
    proto.kind = Binary::Kind::kSymmetry;
    for (int l = 0; l < r; ++l) proto.support_ab.push_back(bit(scheme.reverse({l}).index));
    proto.support_ba = proto.support_ab;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto it = index.find(pairs[p].flipped());
      if (it == index.end() || it->second < static_cast<int>(p)) continue;
      Binary b = proto;
      b.a = static_cast<int>(p);
      b.b = it->second;
      cs.binaries_.push_back(std::move(b));
    }
  }
  if (flags.transitivity) {
    for_each_triple(pairs, index, [&](int ij, int jk, int ik) { cs.triples_.push_back({ij, jk, ik}); });
  }
  if (flags.causal) {
    if (!scheme.has_causal()) throw ConfigError("causal constraint requested but scheme '" + scheme.name() + "' has no causal labels");
    const Label anchor = scheme.causal()->anchor;
    const Label rev_anchor = scheme.reverse(anchor);
    const Mask all = LabelSet::full(r).bits();
    Binary couple;
    couple.kind = Binary::Kind::kCausal;
    couple.support_ab = {all, bit(anchor.index), bit(rev_anchor.index)};
    for (int l = 0; l < r; ++l) {
      Mask m = bit(static_cast<int>(CausalLabel::kNone));
      if (l == anchor.index) m |= bit(static_cast<int>(CausalLabel::kCauses));
      if (l == rev_anchor.index) m |= bit(static_cast<int>(CausalLabel::kCausedBy));
      couple.support_ba.push_back(m);
    }
    for (std::size_t q = 0; q < causal_pairs.size(); ++q) {
      auto it = index.find(causal_pairs[q]);
      if (it == index.end()) {
        throw DataError("causal pair " + pair_text(causal_pairs[q]) + " has no temporal candidate");
      }
      Binary b = couple;
      b.a = cs.num_pairs_ + static_cast<int>(q);
      b.b = it->second;
      cs.binaries_.push_back(std::move(b));
    }
    Binary sym;
    sym.kind = Binary::Kind::kCausalSymmetry;
    for (int c = 0; c < kNumCausalLabels; ++c) {
      sym.support_ab.push_back(bit(static_cast<int>(reverse_causal(static_cast<CausalLabel>(c)))));
    }
    sym.support_ba = sym.support_ab;
    for (std::size_t q = 0; q < causal_pairs.size(); ++q) {
      auto it = causal_index.find(causal_pairs[q].flipped());
      if (it == causal_index.end() || it->second < static_cast<int>(q)) continue;
      Binary b = sym;
      b.a = cs.num_pairs_ + static_cast<int>(q);
      b.b = cs.num_pairs_ + it->second;
      cs.binaries_.push_back(std::move(b));
    }
  }
  return cs;
}

std::vector<LinearConstraint> ConstraintSet::materialize() const {
  std::vector<LinearConstraint> out;
  const int r = num_labels_;
  auto tvar = [&](int p, int l) { return p * r + l; };
  auto cvar = [&](int q, int c) { return num_pairs_ * r + q * kNumCausalLabels + c; };
  auto var_of = [&](int v, int l) { return v < num_pairs_ ? tvar(v, l) : cvar(v - num_pairs_, l); };
  for (int v = 0; v < num_vars(); ++v) {
    LinearConstraint c{"one-hot", {}, LinearConstraint::Sense::kEqual, 1};
    for (int l = 0; l < domain_size(v); ++l) c.terms.push_back({var_of(v, l), 1});
    out.push_back(std::move(c));
  }
  for (const auto& b : binaries_) {
    if (b.kind == Binary::Kind::kCausal) {
      // y^c_q <= sum of temporal labels compatible with c, for the two
      // causal values that constrain anything.
      for (int c = 1; c < kNumCausalLabels; ++c) {
        LinearConstraint lc{"causal", {{var_of(b.a, c), 1}}, LinearConstraint::Sense::kLessEq, 0};
        for (Mask m = b.support_ab[static_cast<std::size_t>(c)]; m; m &= m - 1) {
          lc.terms.push_back({var_of(b.b, std::countr_zero(m)), -1});
        }
        out.push_back(std::move(lc));
      }
      continue;
    }
    for (int l = 0; l < domain_size(b.a); ++l) {
      const int partner = std::countr_zero(b.support_ab[static_cast<std::size_t>(l)]);
      out.push_back({"symmetry", {{var_of(b.a, l), 1}, {var_of(b.b, partner), -1}}, LinearConstraint::Sense::kEqual, 0});
    }
  }
  for (const auto& t : triples_) {
    for (int r1 = 0; r1 < r; ++r1) {
      for (int r2 = 0; r2 < r; ++r2) {
        if (composition_.vacuous({r1}, {r2})) continue;
        LinearConstraint lc{"transitivity", {{tvar(t.ij, r1), 1}, {tvar(t.jk, r2), 1}}, LinearConstraint::Sense::kLessEq, 1};
        for (Label r3 : composition_.compose({r1}, {r2}).labels()) lc.terms.push_back({tvar(t.ik, r3.index), -1});
        out.push_back(std::move(lc));
      }
    }
  }
  return out;
}

std::vector<std::vector<int>> ConstraintSet::components() const {
  std::vector<int> parent(static_cast<std::size_t>(num_vars()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  };
  for (const auto& b : binaries_) unite(b.a, b.b);
  for (const auto& t : triples_) {
    unite(t.ij, t.jk);
    unite(t.ij, t.ik);
  }
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < num_vars(); ++v) groups[find(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& [root, vars] : groups) out.push_back(std::move(vars));
  return out;
}

// ---------------------------------------------------------------------------

Assignment local_decode(const ScoreTable& scores) {
  std::vector<int> labels;
  for (int p = 0; p < scores.num_pairs(); ++p) {
    Eigen::Index best;
    scores.scores.row(p).maxCoeff(&best);
    labels.push_back(static_cast<int>(best));
  }
  for (int q = 0; q < scores.num_causal(); ++q) {
    Eigen::Index best;
    scores.causal_scores.row(q).maxCoeff(&best);
    labels.push_back(static_cast<int>(best));
  }
  return to_assignment(scores, labels);
}

Assignment map_inference(const ScoreTable& scores, const ConstraintSet& constraints, const SolveOptions& options,
                         SolveStats* stats) {
  check_scores(scores, constraints.num_labels());
  if (scores.num_pairs() != constraints.num_pairs() || scores.num_causal() != constraints.num_causal()) {
    throw DataError("score table for '" + scores.doc_id + "' does not cover the constraint set's pairs");
  }
  std::vector<std::vector<int>> groups;
  if (options.split_components) {
    groups = constraints.components();
  } else {
    groups.emplace_back(static_cast<std::size_t>(constraints.num_vars()));
    std::iota(groups.back().begin(), groups.back().end(), 0);
  }
  std::vector<int> labels(static_cast<std::size_t>(constraints.num_vars()), 0);
  std::int64_t nodes = 0;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    Problem problem(constraints, scores, group);
    const auto local = problem.solve(options.node_limit, nodes);
    for (std::size_t k = 0; k < group.size(); ++k) labels[static_cast<std::size_t>(group[k])] = local[k];
  }
  Assignment a = to_assignment(scores, labels);
  if (stats) {
    stats->nodes = nodes;
    stats->upper_bound = a.objective;
    stats->certified = true;
  }
  return a;
}

Assignment map_inference(const ScoreTable& scores, const LabelScheme& scheme, ConstraintFlags flags,
                         const SolveOptions& options, SolveStats* stats) {
  return map_inference(scores, ConstraintSet::build(scores.pairs, scores.causal_pairs, scheme, flags), options, stats);
}

ScoreTable loss_augment(const ScoreTable& scores, const Assignment& gold) {
  if (gold.pairs != scores.pairs || gold.causal_pairs != scores.causal_pairs ||
      gold.labels.size() != scores.pairs.size() || gold.causal.size() != scores.causal_pairs.size()) {
    throw DataError("gold assignment for '" + scores.doc_id + "' does not cover the scored pairs");
  }
  ScoreTable out = scores;
  out.scores.array() += 1.0;
  for (int p = 0; p < scores.num_pairs(); ++p) out.scores(p, gold.labels[static_cast<std::size_t>(p)].index) -= 1.0;
  out.causal_scores.array() += 1.0;
  for (int q = 0; q < scores.num_causal(); ++q) {
    out.causal_scores(q, static_cast<int>(gold.causal[static_cast<std::size_t>(q)])) -= 1.0;
  }
  return out;
}

Assignment loss_augmented_inference(const ScoreTable& scores, const Assignment& gold,
                                    const ConstraintSet& constraints, const SolveOptions& options, SolveStats* stats) {
  return map_inference(loss_augment(scores, gold), constraints, options, stats);
}

double assignment_score(const ScoreTable& scores, const Assignment& assignment) {
  if (assignment.pairs != scores.pairs || assignment.causal_pairs != scores.causal_pairs ||
      assignment.labels.size() != scores.pairs.size() || assignment.causal.size() != scores.causal_pairs.size()) {
    throw DataError("assignment does not cover the scored pairs of '" + scores.doc_id + "'");
  }
  std::vector<int> labels;
  for (Label l : assignment.labels) labels.push_back(l.index);
  for (CausalLabel c : assignment.causal) labels.push_back(static_cast<int>(c));
  return canonical_objective(scores, labels);
}

Assignment brute_force_oracle(const ScoreTable& scores, const LabelScheme& scheme, ConstraintFlags flags, int cap) {
  check_scores(scores, scheme.size());
  const int m = scores.num_pairs();
  const int n = m + scores.num_causal();
  if (n > cap) {
    throw SolverError("brute force refuses " + std::to_string(n) + " variables (cap " + std::to_string(cap) + ")");
  }
  if (flags.causal && !scheme.has_causal()) throw ConfigError("causal constraint requested without causal labels");

  // Constraint lists built directly from the pair lists.
  const auto index = index_pairs(scores.pairs, "candidate");
  const auto causal_index = index_pairs(scores.causal_pairs, "causal");
  std::vector<std::pair<int, int>> sym;
  std::vector<std::array<int, 3>> tri;
  std::vector<std::pair<int, int>> couple;  // (causal var, temporal var)
  std::vector<std::pair<int, int>> causal_sym;
  for (int p = 0; p < m; ++p) {
    auto it = index.find(scores.pairs[static_cast<std::size_t>(p)].flipped());
    if (flags.symmetry && it != index.end() && it->second > p) sym.emplace_back(p, it->second);
  }
  if (flags.transitivity) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const EventPair pa = scores.pairs[static_cast<std::size_t>(a)];
        const EventPair pb = scores.pairs[static_cast<std::size_t>(b)];
        if (pa.second != pb.first || pa.first == pb.second) continue;
        auto it = index.find({pa.first, pb.second});
        if (it != index.end()) tri.push_back({a, b, it->second});
      }
    }
  }
  if (flags.causal) {
    for (int q = 0; q < scores.num_causal(); ++q) {
      const EventPair cp = scores.causal_pairs[static_cast<std::size_t>(q)];
      auto it = index.find(cp);
      if (it == index.end()) throw DataError("causal pair " + pair_text(cp) + " has no temporal candidate");
      couple.emplace_back(m + q, it->second);
      auto rev = causal_index.find(cp.flipped());
      if (rev != causal_index.end() && rev->second > q) causal_sym.emplace_back(m + q, m + rev->second);
    }
  }
  const int anchor = scheme.has_causal() ? scheme.causal()->anchor.index : -1;
  const int rev_anchor = scheme.has_causal() ? scheme.reverse({anchor}).index : -1;

  auto feasible = [&](const std::vector<int>& y) {
    for (auto [a, b] : sym) {
      if (y[static_cast<std::size_t>(b)] != scheme.reverse({y[static_cast<std::size_t>(a)]}).index) return false;
    }
    for (const auto& t : tri) {
      if (!scheme.compose({y[static_cast<std::size_t>(t[0])]}, {y[static_cast<std::size_t>(t[1])]})
               .contains({y[static_cast<std::size_t>(t[2])]})) {
        return false;
      }
    }
    for (auto [c, t] : couple) {
      const auto cl = static_cast<CausalLabel>(y[static_cast<std::size_t>(c)]);
      if (cl == CausalLabel::kCauses && y[static_cast<std::size_t>(t)] != anchor) return false;
      if (cl == CausalLabel::kCausedBy && y[static_cast<std::size_t>(t)] != rev_anchor) return false;
    }
    for (auto [a, b] : causal_sym) {
      if (y[static_cast<std::size_t>(b)] !=
          static_cast<int>(reverse_causal(static_cast<CausalLabel>(y[static_cast<std::size_t>(a)])))) {
        return false;
      }
    }
    return true;
  };

  auto enumerate = [&](auto&& visit) {
    std::vector<int> y(static_cast<std::size_t>(n), 0);
    while (true) {
      if (feasible(y) && visit(y)) return;
      int k = n - 1;
      while (k >= 0) {
        const int size = k < m ? scheme.size() : kNumCausalLabels;
        if (++y[static_cast<std::size_t>(k)] < size) break;
        y[static_cast<std::size_t>(k)] = 0;
        --k;
      }
      if (k < 0) return;
    }
  };

  double best = -std::numeric_limits<double>::infinity();
  enumerate([&](const std::vector<int>& y) {
    best = std::max(best, canonical_objective(scores, y));
    return false;
  });
  if (best == -std::numeric_limits<double>::infinity()) throw SolverError("constraint set is infeasible");
  const double target = tie_threshold(best);
  std::vector<int> chosen;
  enumerate([&](const std::vector<int>& y) {
    if (canonical_objective(scores, y) < target) return false;
    chosen = y;
    return true;
  });
  return to_assignment(scores, chosen);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kSymmetry:
      return "symmetry";
    case Violation::Kind::kTransitivity:
      return "transitivity";
    case Violation::Kind::kCausal:
      return "causal";
  }
  return "unknown";
}

std::vector<Violation> validate_graph(const Assignment& a, const LabelScheme& scheme, ConstraintFlags flags) {
  if (a.labels.size() != a.pairs.size() || a.causal.size() != a.causal_pairs.size()) {
    throw DataError("assignment labels do not match its pair list");
  }
  const auto index = index_pairs(a.pairs, "candidate");
  const auto causal_index = index_pairs(a.causal_pairs, "causal");
  auto name = [&](int p) { return scheme.label_name(a.labels[static_cast<std::size_t>(p)]); };
  std::vector<Violation> out;
  if (flags.symmetry) {
    for (std::size_t p = 0; p < a.pairs.size(); ++p) {
      auto it = index.find(a.pairs[p].flipped());
      if (it == index.end() || it->second < static_cast<int>(p)) continue;
      if (a.labels[static_cast<std::size_t>(it->second)] != scheme.reverse(a.labels[p])) {
        out.push_back({Violation::Kind::kSymmetry, {a.pairs[p], a.pairs[static_cast<std::size_t>(it->second)]},
                       pair_text(a.pairs[p]) + "=" + name(static_cast<int>(p)) + " but " +
                           pair_text(a.pairs[static_cast<std::size_t>(it->second)]) + "=" + name(it->second)});
      }
    }
  }
  if (flags.transitivity) {
    for_each_triple(a.pairs, index, [&](int ij, int jk, int ik) {
      const auto& L = a.labels;
      if (scheme.compose(L[static_cast<std::size_t>(ij)], L[static_cast<std::size_t>(jk)]).contains(L[static_cast<std::size_t>(ik)])) return;
      out.push_back({Violation::Kind::kTransitivity,
                     {a.pairs[static_cast<std::size_t>(ij)], a.pairs[static_cast<std::size_t>(jk)], a.pairs[static_cast<std::size_t>(ik)]},
                     pair_text(a.pairs[static_cast<std::size_t>(ij)]) + "=" + name(ij) + ", " +
                         pair_text(a.pairs[static_cast<std::size_t>(jk)]) + "=" + name(jk) + " rule out " +
                         pair_text(a.pairs[static_cast<std::size_t>(ik)]) + "=" + name(ik)});
    });
  }
  if (flags.causal && !a.causal_pairs.empty()) {
    if (!scheme.has_causal()) throw ConfigError("causal constraint requested without causal labels");
    const Label anchor = scheme.causal()->anchor;
    for (std::size_t q = 0; q < a.causal_pairs.size(); ++q) {
      const EventPair cp = a.causal_pairs[q];
      const CausalLabel c = a.causal[q];
      auto it = index.find(cp);
      if (c != CausalLabel::kNone) {
        const Label need = c == CausalLabel::kCauses ? anchor : scheme.reverse(anchor);
        if (it == index.end() || a.labels[static_cast<std::size_t>(it->second)] != need) {
          out.push_back({Violation::Kind::kCausal, {cp},
                         pair_text(cp) + "=" + scheme.causal_name(c) + " requires " + scheme.label_name(need)});
        }
      }
      auto rev = causal_index.find(cp.flipped());
      if (rev != causal_index.end() && rev->second > static_cast<int>(q) &&
          a.causal[static_cast<std::size_t>(rev->second)] != reverse_causal(c)) {
        out.push_back({Violation::Kind::kCausal, {cp, cp.flipped()},
                       pair_text(cp) + "=" + scheme.causal_name(c) + " but " + pair_text(cp.flipped()) + "=" +
                           scheme.causal_name(a.causal[static_cast<std::size_t>(rev->second)])});
      }
    }
  }
  return out;
}

}  // namespace tempssvm
