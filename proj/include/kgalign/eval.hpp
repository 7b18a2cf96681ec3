// Alignment metrics and diagnostics.
#ifndef KGALIGN_EVAL_HPP_
#define KGALIGN_EVAL_HPP_

#include <algorithm>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgalign/collective.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision over produced matches, recall over gold matches. When the two
/// are equal F1 is returned as that same value.
template <typename Pair>
PrfScores prf(const std::vector<Pair>& predictions, const std::vector<Pair>& gold) {
  if (gold.empty()) throw EvaluationError("gold alignment is empty");
  const std::set<Pair> gold_set(gold.begin(), gold.end());
  std::size_t correct = 0;
  for (const auto& p : predictions)
    if (gold_set.contains(p)) ++correct;
  PrfScores s;
  s.precision = predictions.empty()
                    ? 0.0
                    : static_cast<double>(correct) / static_cast<double>(predictions.size());
  s.recall = static_cast<double>(correct) / static_cast<double>(gold.size());
  if (s.precision == s.recall) {
    s.f1 = s.precision;
  } else if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

/// Assigned (source, target) pairs of a result, in source order.
IndexPairs to_pairs(const AlignmentResult& r);

struct HitsMrr {
  std::map<int, double> hits;  // k -> fraction of gold sources ranked within top k
  double mrr = 0.0;
};

/// `ranked` maps each source to its full target ranking. Every gold target
/// must appear in its source's list.
template <typename Key>
HitsMrr hits_mrr(const std::unordered_map<Key, std::vector<Key>>& ranked,
                 const std::vector<std::pair<Key, Key>>& gold, const std::vector<int>& ks) {
  if (gold.empty()) throw EvaluationError("gold alignment is empty");
  HitsMrr out;
  for (int k : ks) out.hits[k] = 0.0;
  for (const auto& [src, tgt] : gold) {
    const auto it = ranked.find(src);
    if (it == ranked.end()) throw EvaluationError("no ranked list for a gold source");
    const auto pos = std::find(it->second.begin(), it->second.end(), tgt);
    if (pos == it->second.end()) throw EvaluationError("gold target missing from a ranked list");
    const auto rank = static_cast<double>(pos - it->second.begin() + 1);
    out.mrr += 1.0 / rank;
    for (int k : ks)
      if (rank <= k) out.hits[k] += 1.0;
  }
  const auto n = static_cast<double>(gold.size());
  out.mrr /= n;
  for (auto& [k, h] : out.hits) h /= n;
  return out;
}

HitsMrr hits_mrr(const std::vector<std::vector<Index>>& ranked, const IndexPairs& gold,
                 const std::vector<int>& ks);

/// Full ranking of every row by descending score, lower index first on ties.
std::vector<std::vector<Index>> rank_targets(const SimilarityMatrix& m);

struct NameDistanceStats {
  double average = 0.0;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

/// Nearest-rank percentile of an ascending sample: element ceil(p/100 * n),
/// 1-based, clamped to the first element.
double nearest_rank_percentile(const std::vector<double>& sorted, double p);

/// Order statistics of the Levenshtein distance between gold pair names.
/// Median is the nearest-rank 50th percentile.
NameDistanceStats name_distance_stats(const IndexPairs& gold, const KnowledgeGraph& kg1,
                                      const KnowledgeGraph& kg2);
NameDistanceStats distance_stats(std::vector<double> distances);

/// Fraction of distinct pairs that are gold; nullopt for an empty input.
std::optional<double> fraction_correct(const IndexPairs& pairs, const IndexPairs& gold);

/// Fraction of distinct confident correspondences, over all features, that
/// are gold pairs.
std::optional<double> fusion_poc(const std::vector<FeatureCorrespondenceWeights>& corrs,
                                 const IndexPairs& gold);

struct EvalReport {
  PrfScores prf;
  std::optional<HitsMrr> ranking;
  Multiplicities multiplicities;
  std::optional<double> poc;              // confident correspondences
  std::optional<double> preliminary_poc;  // pairs confirmed before decoding
  std::map<std::string, std::string> labels;  // free-form context (dataset, strategy...)
};

/// `key=value` lines.
void write_report_text(const EvalReport& r, std::ostream& out);
/// Same content as a JSON object.
void write_report_json(const EvalReport& r, std::ostream& out);

}  // namespace kgalign

#endif  // KGALIGN_EVAL_HPP_
