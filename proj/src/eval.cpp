#include "kgalign/eval.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "kgalign/name_features.hpp"

namespace kgalign {

IndexPairs to_pairs(const AlignmentResult& r) {
  IndexPairs out;
  for (Index i = 0; i < r.size(); ++i)
    if (const Index t = r.target[static_cast<std::size_t>(i)]; t != kNoIndex) out.push_back({i, t});
  return out;
}

HitsMrr hits_mrr(const std::vector<std::vector<Index>>& ranked, const IndexPairs& gold,
                 const std::vector<int>& ks) {
  std::unordered_map<Index, std::vector<Index>> by_source;
  std::vector<std::pair<Index, Index>> g;
  for (const auto& p : gold) {
    if (p.source < 0 || p.source >= static_cast<Index>(ranked.size()))
      throw EvaluationError("gold source outside the ranked lists");
    by_source.emplace(p.source, ranked[static_cast<std::size_t>(p.source)]);
    g.emplace_back(p.source, p.target);
  }
  return hits_mrr(by_source, g, ks);
}

std::vector<std::vector<Index>> rank_targets(const SimilarityMatrix& m) {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    auto& order = out[static_cast<std::size_t>(i)];
    order.resize(static_cast<std::size_t>(m.cols()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return m.scores(i, a) > m.scores(i, b); });
  }
  return out;
}

double nearest_rank_percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw EvaluationError("percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

NameDistanceStats distance_stats(std::vector<double> distances) {
  if (distances.empty()) throw EvaluationError("no distances");
  std::sort(distances.begin(), distances.end());
  NameDistanceStats s;
  s.average = std::accumulate(distances.begin(), distances.end(), 0.0) /
              static_cast<double>(distances.size());
  s.median = nearest_rank_percentile(distances, 50.0);
  s.p10 = nearest_rank_percentile(distances, 10.0);
  s.p90 = nearest_rank_percentile(distances, 90.0);
  return s;
}

NameDistanceStats name_distance_stats(const IndexPairs& gold, const KnowledgeGraph& kg1,
                                      const KnowledgeGraph& kg2) {
  std::vector<double> d;
  d.reserve(gold.size());
  for (const auto& p : gold)
    d.push_back(static_cast<double>(levenshtein(kg1.name(p.source), kg2.name(p.target))));
  return distance_stats(std::move(d));
}

std::optional<double> fraction_correct(const IndexPairs& pairs, const IndexPairs& gold) {
  const std::set<IndexPair> distinct(pairs.begin(), pairs.end());
  if (distinct.empty()) return std::nullopt;
  const std::set<IndexPair> gold_set(gold.begin(), gold.end());
  std::size_t correct = 0;
  for (const auto& p : distinct)
    if (gold_set.contains(p)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(distinct.size());
}

std::optional<double> fusion_poc(const std::vector<FeatureCorrespondenceWeights>& corrs,
                                 const IndexPairs& gold) {
  IndexPairs all;
  for (const auto& f : corrs)
    for (const auto& c : f.items) all.push_back({c.corr.source, c.corr.target});
  return fraction_correct(all, gold);
}

void write_report_text(const EvalReport& r, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [k, v] : r.labels) out << k << '=' << v << '\n';
  out << "precision=" << r.prf.precision << '\n';
  out << "recall=" << r.prf.recall << '\n';
  out << "f1=" << r.prf.f1 << '\n';
  if (r.ranking) {
    for (const auto& [k, h] : r.ranking->hits) out << "hits@" << k << '=' << h << '\n';
    out << "mrr=" << r.ranking->mrr << '\n';
  }
  out << "mulse=" << r.multiplicities.mulse << '\n';
  out << "multe=" << r.multiplicities.multe << '\n';
  if (r.poc) out << "poc=" << *r.poc << '\n';
  if (r.preliminary_poc) out << "preliminary_poc=" << *r.preliminary_poc << '\n';
}

void write_report_json(const EvalReport& r, std::ostream& out) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : r.labels) j["labels"][k] = v;
  j["precision"] = r.prf.precision;
  j["recall"] = r.prf.recall;
  j["f1"] = r.prf.f1;
  if (r.ranking) {
    for (const auto& [k, h] : r.ranking->hits) j["hits"][std::to_string(k)] = h;
    j["mrr"] = r.ranking->mrr;
  }
  j["mulse"] = r.multiplicities.mulse;
  j["multe"] = r.multiplicities.multe;
  if (r.poc) j["poc"] = *r.poc;
  if (r.preliminary_poc) j["preliminary_poc"] = *r.preliminary_poc;
  out << j.dump(2) << '\n';
}

}  // namespace kgalign
