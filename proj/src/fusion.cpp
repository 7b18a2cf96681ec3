#include "kgalign/fusion.hpp"

#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

namespace kgalign {

void validate(const FusionConfig& cfg) {
  if (!(cfg.theta2 > 0.0)) throw ArgumentError("theta2 must be > 0");
  if (!std::isfinite(cfg.theta1)) throw ArgumentError("theta1 must be finite");
}

std::vector<ConfidentCorrespondence> confident_correspondences(const SimilarityMatrix& m) {
  std::vector<ConfidentCorrespondence> out;
  if (m.rows() == 0 || m.cols() == 0) return out;
  // Column champion: index of the strict maximum, or kNoIndex on a tie.
  std::vector<Index> col_best(static_cast<std::size_t>(m.cols()), kNoIndex);
  for (Index j = 0; j < m.cols(); ++j) {
    Index best = 0;
    bool tied = false;
    for (Index i = 1; i < m.rows(); ++i) {
      if (m.scores(i, j) > m.scores(best, j)) {
        best = i;
        tied = false;
      } else if (m.scores(i, j) == m.scores(best, j)) {
        tied = true;
      }
    }
    col_best[static_cast<std::size_t>(j)] = tied ? kNoIndex : best;
  }
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    bool tied = false;
    for (Index j = 1; j < m.cols(); ++j) {
      if (m.scores(i, j) > m.scores(i, best)) {
        best = j;
        tied = false;
      } else if (m.scores(i, j) == m.scores(i, best)) {
        tied = true;
      }
    }
    if (!tied && col_best[static_cast<std::size_t>(best)] == i)
      out.push_back({i, best, m.scores(i, best), m.tag});
  }
  return out;
}

std::vector<FeatureCorrespondenceWeights> correspondence_weights(
    const std::vector<FeatureCorrespondences>& per_feature, const FusionConfig& cfg) {
  std::map<IndexPair, int> occurrences;
  for (const auto& f : per_feature)
    for (const auto& c : f.items) ++occurrences[{c.source, c.target}];

  std::vector<FeatureCorrespondenceWeights> out;
  out.reserve(per_feature.size());
  for (const auto& f : per_feature) {
    FeatureCorrespondenceWeights fw{f.feature, {}};
    for (const auto& c : f.items) {
      const int q = occurrences.at({c.source, c.target});
      double w = 1.0 / q;
      if (c.score > cfg.theta1)
        w = cfg.order == OverrideOrder::divide_then_override ? cfg.theta2 : cfg.theta2 / q;
      fw.items.push_back({c, q, w});
    }
    out.push_back(std::move(fw));
  }
  return out;
}

double FeatureWeights::weight(FeatureTag tag) const {
  for (std::size_t p = 0; p < features.size(); ++p)
    if (features[p] == tag) return weights[p];
  throw ArgumentError("no weight for feature '" + to_string(tag) + "'");
}

FeatureWeights feature_weights(const std::vector<FeatureCorrespondenceWeights>& per_feature,
                               EmptyFeaturesPolicy policy) {
  if (per_feature.empty()) throw FusionError("no features to weight");
  FeatureWeights out;
  double total = 0.0;
  for (const auto& f : per_feature) {
    double score = 0.0;
    if (!f.items.empty()) {
      for (const auto& c : f.items) score += c.weight;
      score /= static_cast<double>(f.items.size());
    }
    out.features.push_back(f.feature);
    out.weight_scores.push_back(score);
    total += score;
  }
  if (total > 0.0) {
    for (double s : out.weight_scores) out.weights.push_back(s / total);
    return out;
  }
  if (policy == EmptyFeaturesPolicy::raise)
    throw FusionError("no feature produced a confident correspondence");
  out.equal_fallback = true;
  out.weights.assign(per_feature.size(), 1.0 / static_cast<double>(per_feature.size()));
  return out;
}

FusionOutcome adaptive_fuse(const std::vector<SimilarityMatrix>& matrices,
                            const FusionConfig& cfg, EmptyFeaturesPolicy policy) {
  validate(cfg);
  std::vector<FeatureCorrespondences> per_feature;
  per_feature.reserve(matrices.size());
  for (const auto& m : matrices) per_feature.push_back({m.tag, confident_correspondences(m)});
  FusionOutcome out;
  out.correspondences = correspondence_weights(per_feature, cfg);
  out.weights = feature_weights(out.correspondences, policy);
  out.fused = fuse(matrices, out.weights);
  return out;
}

void write_fusion_report(const FusionOutcome& outcome, const FusionConfig& cfg,
                         std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "theta1=" << cfg.theta1 << '\n';
  out << "theta2=" << cfg.theta2 << '\n';
  out << "override_order="
      << (cfg.order == OverrideOrder::divide_then_override ? "divide_then_override"
                                                           : "override_then_divide")
      << '\n';
  out << "equal_fallback=" << (outcome.weights.equal_fallback ? "true" : "false") << '\n';
  const auto& w = outcome.weights;
  for (std::size_t p = 0; p < w.features.size(); ++p) {
    const auto name = to_string(w.features[p]);
    out << "weight_score." << name << '=' << w.weight_scores[p] << '\n';
    out << "weight." << name << '=' << w.weights[p] << '\n';
  }
  for (const auto& f : outcome.correspondences) {
    const auto name = to_string(f.feature);
    out << "correspondences." << name << '=' << f.items.size() << '\n';
    for (const auto& c : f.items)
      out << "corr." << name << '=' << c.corr.source << ' ' << c.corr.target << ' '
          << c.corr.score << ' ' << c.occurrences << ' ' << c.weight << '\n';
  }
}

}  // namespace kgalign
