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

// Test-side reference implementations. None of these call into the
// library's algorithms: label semantics are spelled out by hand, the
// composition table comes from enumerating integer endpoints, and MAP
// decoding is plain exhaustive search.

#ifndef TEMPSSVM_TESTS_ORACLES_H_
#define TEMPSSVM_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Label names in scheme order.
inline const std::vector<std::string> kDense = {"BEFORE", "AFTER", "INCLUDES", "IS_INCLUDED", "SIMULTANEOUS", "VAGUE"};
inline const std::vector<std::string> kStart = {"BEFORE", "AFTER", "SIMULTANEOUS", "VAGUE"};

struct Iv {
  int s;
  int e;
};

// Hand-written label of (a, b) for the dense scheme; strict containment.
inline int dense_label(Iv a, Iv b) {
  if (a.e < b.s) return 0;
  if (b.e < a.s) return 1;
  if (a.s < b.s && b.e < a.e) return 2;
  if (b.s < a.s && a.e < b.e) return 3;
  if (a.s == b.s && a.e == b.e) return 4;
  return 5;
}

inline int start_label(Iv a, Iv b) {
  if (a.s < b.s) return 0;
  if (b.s < a.s) return 1;
  return 2;
}

// table[r1][r2] = set of labels on (i,k). VAGUE antecedents admit every
// arrangement; the consequent gets VAGUE when some arrangement matches no
// definite label or more than one definite label is realizable.
inline std::vector<std::vector<std::set<int>>> composition(bool dense) {
  const int n = dense ? 6 : 4;
  const int vague = n - 1;
  std::vector<std::vector<std::set<int>>> t(n, std::vector<std::set<int>>(n));
  auto label = [&](Iv a, Iv b) { return dense ? dense_label(a, b) : start_label(a, b); };
  const int values = dense ? 6 : 3;
  std::vector<Iv> choices;
  for (int s = 0; s < values; ++s) {
    if (!dense) {
      choices.push_back({s, s});
      continue;
    }
    for (int e = s + 1; e < values; ++e) choices.push_back({s, e});
  }
  for (const Iv& a : choices) {
    for (const Iv& b : choices) {
      for (const Iv& c : choices) {
        const int ab = label(a, b), bc = label(b, c), ac = label(a, c);
        for (int r1 = 0; r1 < n; ++r1) {
          if (r1 != vague && r1 != ab) continue;
          for (int r2 = 0; r2 < n; ++r2) {
            if (r2 != vague && r2 != bc) continue;
            t[r1][r2].insert(ac);
          }
        }
      }
    }
  }
  for (auto& row : t) {
    for (auto& cell : row) {
      int definite = 0;
      for (int l : cell) definite += l != vague;
      if (definite > 1) cell.insert(vague);
    }
  }
  return t;
}

// Exhaustive constrained MAP over temporal pairs (and causal pairs when
// `causal_scores` is non-empty). `pairs` are (i, j) event indices;
// `reverse[r]` is the reverse label. Ties: the lexicographically smallest
// assignment (temporal labels, then causal values) whose objective is within
// 1e-9 * max(1, |best|) of the best.
struct MapProblem {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<double>> scores;  // [pair][label]
  std::vector<std::pair<int, int>> causal_pairs;
  std::vector<std::vector<double>> causal_scores;  // [pair][none, causes, caused_by]
  std::vector<int> reverse;
  std::vector<std::vector<std::set<int>>> table;
  bool symmetry = true;
  bool transitivity = true;
  bool causal = false;
  int anchor = 0;  // label forced by CAUSES
};

struct MapSolution {
  std::vector<int> labels;
  std::vector<int> causal;
  double objective = 0.0;
};

inline bool feasible(const MapProblem& p, const std::vector<int>& y, const std::vector<int>& c) {
  std::map<std::pair<int, int>, int> at;
  for (std::size_t k = 0; k < p.pairs.size(); ++k) at[p.pairs[k]] = y[k];
  if (p.symmetry) {
    for (const auto& [ij, r] : at) {
      auto it = at.find({ij.second, ij.first});
      if (it != at.end() && it->second != p.reverse[r]) return false;
    }
  }
  if (p.transitivity) {
    for (const auto& [ij, r1] : at) {
      for (const auto& [jk, r2] : at) {
        if (jk.first != ij.second || jk.second == ij.first) continue;
        auto it = at.find({ij.first, jk.second});
        if (it == at.end()) continue;
        if (!p.table[r1][r2].count(it->second)) return false;
      }
    }
  }
  if (p.causal) {
    std::map<std::pair<int, int>, int> cat;
    for (std::size_t q = 0; q < p.causal_pairs.size(); ++q) cat[p.causal_pairs[q]] = c[q];
    for (const auto& [ij, v] : cat) {
      auto t = at.find(ij);
      if (v == 1 && (t == at.end() || t->second != p.anchor)) return false;
      if (v == 2 && (t == at.end() || t->second != p.reverse[p.anchor])) return false;
      auto back = cat.find({ij.second, ij.first});
      if (back != cat.end()) {
        const int want = v == 0 ? 0 : 3 - v;
        if (back->second != want) return false;
      }
    }
  }
  return true;
}

inline double objective(const MapProblem& p, const std::vector<int>& y, const std::vector<int>& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += p.scores[k][static_cast<std::size_t>(y[k])];
  for (std::size_t q = 0; q < c.size(); ++q) s += p.causal_scores[q][static_cast<std::size_t>(c[q])];
  return s;
}

inline MapSolution solve(const MapProblem& p) {
  const int labels = static_cast<int>(p.reverse.size());
  const std::size_t m = p.pairs.size(), mc = p.causal_pairs.size();
  std::vector<int> y(m, 0), c(mc, 0);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> feasible_all;
  std::vector<double> values;
  // Odometer over temporal labels, then causal values.
  while (true) {
    if (feasible(p, y, c)) {
      feasible_all.emplace_back(y, c);
      values.push_back(objective(p, y, c));
    }
    std::size_t k = 0;
    const std::size_t total = m + mc;
    while (k < total) {
      const std::size_t pos = total - 1 - k;
      int& digit = pos < m ? y[pos] : c[pos - m];
      const int base = pos < m ? labels : 3;
      if (++digit < base) break;
      digit = 0;
      ++k;
    }
    if (k == total) break;
  }
  MapSolution out;
  if (values.empty()) return out;
  const double best = *std::max_element(values.begin(), values.end());
  const double floor = best - 1e-9 * std::max(1.0, std::abs(best));
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t] >= floor) {
      out.labels = feasible_all[t].first;
      out.causal = feasible_all[t].second;
      out.objective = values[t];
      return out;  // enumeration order is lexicographic
    }
  }
  return out;
}

// Directed edge set of a consistent graph on n nodes: label per ordered pair
// (i < j), -1 for none. Closure adds (i,k) when (i,j),(j,k) compose to a
// single definite label; edges are read in either orientation.
using Graph = std::map<std::pair<int, int>, int>;

inline int read_edge(const Graph& g, int i, int j, const std::vector<int>& reverse) {
  if (i < j) {
    auto it = g.find({i, j});
    return it == g.end() ? -1 : it->second;
  }
  auto it = g.find({j, i});
  return it == g.end() ? -1 : reverse[static_cast<std::size_t>(it->second)];
}

inline Graph closure(Graph g, int n, const std::vector<std::vector<std::set<int>>>& table,
                     const std::vector<int>& reverse, int vague) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          if (i == j || j == k || i == k) continue;
          const int a = read_edge(g, i, j, reverse), b = read_edge(g, j, k, reverse);
          if (a < 0 || b < 0) continue;
          const auto& cell = table[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
          if (cell.size() != 1 || *cell.begin() == vague) continue;
          if (read_edge(g, i, k, reverse) >= 0) continue;
          const int l = *cell.begin();
          if (i < k) g[{i, k}] = l;
          else g[{k, i}] = reverse[static_cast<std::size_t>(l)];
          changed = true;
        }
      }
    }
  }
  return g;
}

inline std::uint64_t choose(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

}  // namespace oracle

#endif  // TEMPSSVM_TESTS_ORACLES_H_
