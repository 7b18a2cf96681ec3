// Adaptive outcome-level fusion of feature-specific similarity matrices.
//
// Each feature proposes confident correspondences (cells strictly maximal in
// both their row and column). A correspondence found by q features weighs
// 1/q in each of them, except that a copy whose score exceeds theta1 weighs
// theta2 instead. A feature's weight score is the mean weight of its
// correspondences; normalizing the weight scores gives the feature weights.
#ifndef KGALIGN_FUSION_HPP_
#define KGALIGN_FUSION_HPP_

#include <iosfwd>
#include <vector>

#include "kgalign/simmat.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

struct ConfidentCorrespondence {
  Index source = 0;
  Index target = 0;
  double score = 0.0;
  FeatureTag feature = FeatureTag::fused;
};

/// Whether the theta2 override replaces the 1/q weight (default) or is
/// itself divided by q.
enum class OverrideOrder { divide_then_override, override_then_divide };

struct FusionConfig {
  double theta1 = 0.99;
  double theta2 = 0.48;
  OverrideOrder order = OverrideOrder::divide_then_override;
};

void validate(const FusionConfig& cfg);

struct FeatureCorrespondences {
  FeatureTag feature = FeatureTag::fused;
  std::vector<ConfidentCorrespondence> items;
};

struct WeightedCorrespondence {
  ConfidentCorrespondence corr;
  int occurrences = 1;  // q: features producing the same (source, target)
  double weight = 1.0;
};

struct FeatureCorrespondenceWeights {
  FeatureTag feature = FeatureTag::fused;
  std::vector<WeightedCorrespondence> items;
};

/// Cells strictly greater than every other cell in their row and column.
std::vector<ConfidentCorrespondence> confident_correspondences(const SimilarityMatrix& m);

std::vector<FeatureCorrespondenceWeights> correspondence_weights(
    const std::vector<FeatureCorrespondences>& per_feature, const FusionConfig& cfg);

struct FeatureWeights {
  std::vector<FeatureTag> features;
  std::vector<double> weight_scores;
  std::vector<double> weights;  // sums to 1
  bool equal_fallback = false;  // no feature had a confident correspondence

  double weight(FeatureTag tag) const;
};

enum class EmptyFeaturesPolicy { raise, equal_weights };

/// A feature without correspondences gets weight score 0. When every feature
/// is empty, `raise` throws FusionError and `equal_weights` returns uniform
/// weights with `equal_fallback` set.
FeatureWeights feature_weights(const std::vector<FeatureCorrespondenceWeights>& per_feature,
                               EmptyFeaturesPolicy policy = EmptyFeaturesPolicy::raise);

/// sum_p weight_p * M^p. Weights must list the matrices' features in order.
template <typename Scalar>
BasicSimilarityMatrix<Scalar> fuse(const std::vector<BasicSimilarityMatrix<Scalar>>& matrices,
                                   const FeatureWeights& weights) {
  if (matrices.empty()) throw ArgumentError("fuse needs at least one matrix");
  if (weights.weights.size() != matrices.size() || weights.features.size() != matrices.size())
    throw ArgumentError("feature weights do not cover the given matrices");
  BasicSimilarityMatrix<Scalar> out(matrices.front().rows(), matrices.front().cols(),
                                    FeatureTag::fused);
  for (std::size_t p = 0; p < matrices.size(); ++p) {
    const auto& m = matrices[p];
    if (m.rows() != out.rows() || m.cols() != out.cols())
      throw ArgumentError("similarity matrices differ in shape");
    if (m.tag != weights.features[p])
      throw ArgumentError("missing weight for feature '" + to_string(m.tag) + "'");
    out.scores += static_cast<Scalar>(weights.weights[p]) * m.scores;
  }
  return out;
}

struct FusionOutcome {
  std::vector<FeatureCorrespondenceWeights> correspondences;
  FeatureWeights weights;
  SimilarityMatrix fused;
};

/// The whole adaptive pipeline over the given feature matrices.
FusionOutcome adaptive_fuse(const std::vector<SimilarityMatrix>& matrices,
                            const FusionConfig& cfg,
                            EmptyFeaturesPolicy policy = EmptyFeaturesPolicy::equal_weights);

/// Key-value text: theta values, one `weight.<feature>` line per feature and
/// one `corr.<feature>` line per confident correspondence.
void write_fusion_report(const FusionOutcome& outcome, const FusionConfig& cfg, std::ostream& out);

}  // namespace kgalign

#endif  // KGALIGN_FUSION_HPP_
