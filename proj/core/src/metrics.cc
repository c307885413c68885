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

#include "tempssvm/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "tempssvm/error.h"

namespace tempssvm {

namespace {

std::string pair_text(EventPair p) { return "(" + std::to_string(p.first) + ", " + std::to_string(p.second) + ")"; }

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

void check_lists(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold) {
  if (pred.size() != gold.size()) {
    throw DataError("prediction covers " + std::to_string(pred.size()) + " instances, gold " +
                    std::to_string(gold.size()));
  }
  for (std::size_t n = 0; n < pred.size(); ++n) check_same_domain(pred[n], gold[n], "instance " + std::to_string(n));
}

}  // namespace

double f1_score(double precision, double recall) {
  if (precision <= 0.0 || recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Prf make_prf(long correct, long predicted, long gold) {
  Prf out;
  out.correct = correct;
  out.predicted = predicted;
  out.gold = gold;
  out.precision = ratio(correct, predicted);
  out.recall = ratio(correct, gold);
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

std::vector<std::string> pair_domain_diff(const Assignment& pred, const Assignment& gold) {
  std::set<EventPair> p(pred.pairs.begin(), pred.pairs.end());
  std::set<EventPair> g(gold.pairs.begin(), gold.pairs.end());
  std::vector<std::string> out;
  for (const auto& e : g) {
    if (!p.count(e)) out.push_back("- " + pair_text(e) + " missing from prediction");
  }
  for (const auto& e : p) {
    if (!g.count(e)) out.push_back("+ " + pair_text(e) + " not in gold");
  }
  if (out.empty() && pred.pairs != gold.pairs) out.push_back("~ same pairs in a different order");
  std::set<EventPair> pc(pred.causal_pairs.begin(), pred.causal_pairs.end());
  std::set<EventPair> gc(gold.causal_pairs.begin(), gold.causal_pairs.end());
  for (const auto& e : gc) {
    if (!pc.count(e)) out.push_back("- causal " + pair_text(e) + " missing from prediction");
  }
  for (const auto& e : pc) {
    if (!gc.count(e)) out.push_back("+ causal " + pair_text(e) + " not in gold");
  }
  return out;
}

void check_same_domain(const Assignment& pred, const Assignment& gold, const std::string& doc_id) {
  if (pred.pairs == gold.pairs && pred.causal_pairs == gold.causal_pairs &&
      pred.labels.size() == pred.pairs.size() && gold.labels.size() == gold.pairs.size() &&
      pred.causal.size() == pred.causal_pairs.size() && gold.causal.size() == gold.causal_pairs.size()) {
    return;
  }
  std::string msg = "pair domains differ" + (doc_id.empty() ? std::string() : " for " + doc_id) + ":";
  for (const auto& line : pair_domain_diff(pred, gold)) msg += "\n  " + line;
  throw DataError(msg);
}

Prf micro_average(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold, LabelSet exclude) {
  check_lists(pred, gold);
  long correct = 0, predicted = 0, golds = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t p = 0; p < pred[n].labels.size(); ++p) {
      const Label y = gold[n].labels[p];
      const Label yhat = pred[n].labels[p];
      if (!exclude.contains(yhat)) ++predicted;
      if (!exclude.contains(y)) ++golds;
      if (y == yhat && !exclude.contains(y)) ++correct;
    }
  }
  return make_prf(correct, predicted, golds);
}

Prf causal_micro_average(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold) {
  check_lists(pred, gold);
  long correct = 0, predicted = 0, golds = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t q = 0; q < pred[n].causal.size(); ++q) {
      const CausalLabel y = gold[n].causal[q];
      const CausalLabel yhat = pred[n].causal[q];
      if (yhat != CausalLabel::kNone) ++predicted;
      if (y != CausalLabel::kNone) ++golds;
      if (y == yhat && y != CausalLabel::kNone) ++correct;
    }
  }
  return make_prf(correct, predicted, golds);
}

EvalReport evaluate(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold,
                    const LabelScheme& scheme, LabelSet exclude) {
  EvalReport r;
  const int k = scheme.size();
  r.micro = micro_average(pred, gold, exclude);
  r.confusion.assign(static_cast<std::size_t>(k), std::vector<long>(static_cast<std::size_t>(k), 0));
  bool any_causal = false;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t p = 0; p < pred[n].labels.size(); ++p) {
      ++r.confusion[static_cast<std::size_t>(gold[n].labels[p].index)][static_cast<std::size_t>(pred[n].labels[p].index)];
      ++r.pairs;
    }
    any_causal = any_causal || !pred[n].causal.empty();
  }
  for (int l = 0; l < k; ++l) {
    r.label_names.push_back(scheme.label_name({l}));
    long tp = r.confusion[static_cast<std::size_t>(l)][static_cast<std::size_t>(l)];
    long predicted = 0, golds = 0;
    for (int o = 0; o < k; ++o) {
      predicted += r.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(l)];
      golds += r.confusion[static_cast<std::size_t>(l)][static_cast<std::size_t>(o)];
    }
    r.per_label.push_back(make_prf(tp, predicted, golds));
  }
  for (Label l : exclude.labels()) r.excluded.push_back(scheme.label_name(l));
  if (any_causal) r.causal = causal_micro_average(pred, gold);
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-14s %9s %9s %9s %8s %8s\n", "label", "precision", "recall", "f1", "pred", "gold");
  out << buf;
  for (std::size_t l = 0; l < label_names.size(); ++l) {
    const Prf& p = per_label[l];
    std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f %8ld %8ld\n", label_names[l].c_str(), p.precision,
                  p.recall, p.f1, p.predicted, p.gold);
    out << buf;
  }
  std::string excl;
  for (const auto& e : excluded) excl += (excl.empty() ? "" : ",") + e;
  std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f %8ld %8ld  exclude=%s\n", "micro", micro.precision,
                micro.recall, micro.f1, micro.predicted, micro.gold, excl.empty() ? "-" : excl.c_str());
  out << buf;
  if (causal) {
    std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f %8ld %8ld\n", "causal", causal->precision,
                  causal->recall, causal->f1, causal->predicted, causal->gold);
    out << buf;
  }
  out << "pairs " << pairs << "  direction " << direction << "  violations " << violations << "\n";
  out << "confusion (rows gold, columns predicted)\n";
  std::snprintf(buf, sizeof(buf), "%-14s", "");
  out << buf;
  for (const auto& name : label_names) {
    std::snprintf(buf, sizeof(buf), " %12.12s", name.c_str());
    out << buf;
  }
  out << "\n";
  for (std::size_t g = 0; g < confusion.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%-14s", label_names[g].c_str());
    out << buf;
    for (long v : confusion[g]) {
      std::snprintf(buf, sizeof(buf), " %12ld", v);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

nlohmann::json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"correct", p.correct},     {"predicted", p.predicted}, {"gold", p.gold}};
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["micro"] = prf_json(micro);
  j["excluded"] = excluded;
  j["direction"] = direction;
  j["violations"] = violations;
  j["pairs"] = pairs;
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t l = 0; l < label_names.size(); ++l) labels[label_names[l]] = prf_json(per_label[l]);
  j["per_label"] = labels;
  j["confusion"] = {{"labels", label_names}, {"counts", confusion}};
  if (causal) j["causal"] = prf_json(*causal);
  return j.dump();
}

// ---------------------------------------------------------------------------

RelationGraph to_graph(const Assignment& a, const LabelScheme& scheme) {
  RelationGraph g;
  const auto vague = scheme.vague();
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    const Label l = a.labels[p];
    if (vague && l == *vague) continue;
    const EventPair e = a.pairs[p];
    if (e.first < e.second) {
      g.emplace(e, l);
    } else {
      g.emplace(e.flipped(), scheme.reverse(l));
    }
  }
  return g;
}

std::optional<Label> edge_label(const RelationGraph& g, int i, int j, const LabelScheme& scheme) {
  if (i < j) {
    auto it = g.find({i, j});
    if (it != g.end()) return it->second;
    return std::nullopt;
  }
  auto it = g.find({j, i});
  if (it != g.end()) return scheme.reverse(it->second);
  return std::nullopt;
}

ClosureResult closure_with_report(const RelationGraph& g, const LabelScheme& scheme) {
  ClosureResult out{g, {}};
  const auto vague = scheme.vague();
  std::set<EventPair> reported;
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<int, std::vector<int>> nbrs;
    for (const auto& [e, l] : out.graph) {
      nbrs[e.first].push_back(e.second);
      nbrs[e.second].push_back(e.first);
    }
    for (const auto& [i, js] : nbrs) {
      for (int j : js) {
        for (int k : nbrs[j]) {
          if (k == i) continue;
          const Label r1 = *edge_label(out.graph, i, j, scheme);
          const Label r2 = *edge_label(out.graph, j, k, scheme);
          const LabelSet t = scheme.compose(r1, r2);
          if (t.size() != 1) continue;
          const Label r3 = t.labels().front();
          if (vague && r3 == *vague) continue;
          const auto existing = edge_label(out.graph, i, k, scheme);
          if (!existing) {
            if (i < k) {
              out.graph.emplace(EventPair{i, k}, r3);
            } else {
              out.graph.emplace(EventPair{k, i}, scheme.reverse(r3));
            }
            changed = true;
          } else if (*existing != r3) {
            const EventPair key{std::min(i, k), std::max(i, k)};
            if (reported.insert(key).second) out.inconsistencies.push_back(key);
          }
        }
      }
      if (changed) break;  // adjacency is stale; rebuild
    }
  }
  return out;
}

RelationGraph closure(const RelationGraph& g, const LabelScheme& scheme) {
  return closure_with_report(g, scheme).graph;
}

RelationGraph reduce(const RelationGraph& g, const LabelScheme& scheme) {
  RelationGraph current = g;
  for (const auto& [e, l] : g) {
    RelationGraph without = current;
    without.erase(e);
    const RelationGraph cl = closure(without, scheme);
    const auto implied = edge_label(cl, e.first, e.second, scheme);
    if (implied && *implied == l) current = std::move(without);
  }
  return current;
}

namespace {

long count_shared(const RelationGraph& a, const RelationGraph& b, const LabelScheme& scheme) {
  long n = 0;
  for (const auto& [e, l] : a) {
    const auto other = edge_label(b, e.first, e.second, scheme);
    if (other && *other == l) ++n;
  }
  return n;
}

struct AwarenessCounts {
  long p_num = 0, p_den = 0, r_num = 0, r_den = 0;
};

AwarenessCounts awareness_counts(const RelationGraph& pred, const RelationGraph& gold, const LabelScheme& scheme) {
  const RelationGraph pred_red = reduce(pred, scheme);
  const RelationGraph gold_red = reduce(gold, scheme);
  const RelationGraph pred_cl = closure(pred, scheme);
  const RelationGraph gold_cl = closure(gold, scheme);
  return {count_shared(pred_red, gold_cl, scheme), static_cast<long>(pred_red.size()),
          count_shared(gold_red, pred_cl, scheme), static_cast<long>(gold_red.size())};
}

Prf awareness_prf(const AwarenessCounts& c) {
  Prf out;
  out.precision = ratio(c.p_num, c.p_den);
  out.recall = ratio(c.r_num, c.r_den);
  out.f1 = f1_score(out.precision, out.recall);
  out.correct = c.p_num;
  out.predicted = c.p_den;
  out.gold = c.r_den;
  return out;
}

}  // namespace

Prf temporal_awareness(const RelationGraph& pred, const RelationGraph& gold, const LabelScheme& scheme) {
  return awareness_prf(awareness_counts(pred, gold, scheme));
}

Prf temporal_awareness(const std::vector<Assignment>& pred, const std::vector<Assignment>& gold,
                       const LabelScheme& scheme) {
  check_lists(pred, gold);
  AwarenessCounts total;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const auto c = awareness_counts(to_graph(pred[n], scheme), to_graph(gold[n], scheme), scheme);
    total.p_num += c.p_num;
    total.p_den += c.p_den;
    total.r_num += c.r_num;
    total.r_den += c.r_den;
  }
  return awareness_prf(total);
}

// ---------------------------------------------------------------------------

McNemarResult mcnemar(long b, long c) {
  if (b < 0 || c < 0) throw DataError("discordant counts must be nonnegative");
  McNemarResult r;
  r.b = b;
  r.c = c;
  const long n = b + c;
  if (n == 0) {
    r.p_exact = 1.0;
    r.note = "no discordant pairs";
    return r;
  }
  const long k = std::min(b, c);
  double tail = 0.0;
  if (n <= 1000) {
    // pmf(0) = 2^-n exactly; successive terms by the ratio (n - i) / (i + 1).
    double pmf = std::ldexp(1.0, static_cast<int>(-n));
    for (long i = 0; i <= k; ++i) {
      tail += pmf;
      pmf = pmf * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
  } else {
    const double log_half = static_cast<double>(n) * std::log(0.5);
    for (long i = 0; i <= k; ++i) {
      tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) +
                       log_half);
    }
  }
  r.p_exact = std::min(1.0, 2.0 * tail);
  if (n >= 25) {
    const double d = std::abs(static_cast<double>(b - c)) - 1.0;
    const double stat = std::max(0.0, d) * std::max(0.0, d) / static_cast<double>(n);
    r.p_chi_square = std::erfc(std::sqrt(stat / 2.0));
  }
  return r;
}

McNemarResult mcnemar(const std::vector<Assignment>& pred_a, const std::vector<Assignment>& pred_b,
                      const std::vector<Assignment>& gold) {
  check_lists(pred_a, gold);
  check_lists(pred_b, gold);
  long b = 0, c = 0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    for (std::size_t p = 0; p < gold[n].labels.size(); ++p) {
      const bool a_ok = pred_a[n].labels[p] == gold[n].labels[p];
      const bool b_ok = pred_b[n].labels[p] == gold[n].labels[p];
      if (a_ok && !b_ok) ++b;
      if (!a_ok && b_ok) ++c;
    }
  }
  return mcnemar(b, c);
}

}  // namespace tempssvm
