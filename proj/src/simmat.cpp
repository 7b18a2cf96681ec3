#include "kgalign/simmat.hpp"

namespace kgalign {

std::string to_string(FeatureTag tag) {
  switch (tag) {
    case FeatureTag::structural:
      return "structural";
    case FeatureTag::semantic:
      return "semantic";
    case FeatureTag::string:
      return "string";
    case FeatureTag::fused:
      return "fused";
  }
  return "unknown";
}

FeatureTag parse_feature_tag(const std::string& name) {
  if (name == "structural") return FeatureTag::structural;
  if (name == "semantic") return FeatureTag::semantic;
  if (name == "string") return FeatureTag::string;
  if (name == "fused") return FeatureTag::fused;
  throw ArgumentError("unknown feature tag '" + name + "'");
}

DistanceMeasure parse_measure(const std::string& name) {
  if (name == "bc") return {Measure::bray_curtis, BrayCurtisForm::per_coordinate};
  if (name == "bc-textbook") return {Measure::bray_curtis, BrayCurtisForm::textbook};
  if (name == "cos") return {Measure::cosine, BrayCurtisForm::per_coordinate};
  if (name == "man") return {Measure::manhattan, BrayCurtisForm::per_coordinate};
  if (name == "euc") return {Measure::euclidean, BrayCurtisForm::per_coordinate};
  throw ArgumentError("unknown measure '" + name + "' (expected bc, cos, man or euc)");
}

std::string to_string(const DistanceMeasure& m) {
  switch (m.kind) {
    case Measure::bray_curtis:
      return m.bray_curtis_form == BrayCurtisForm::textbook ? "bc-textbook" : "bc";
    case Measure::manhattan:
      return "man";
    case Measure::euclidean:
      return "euc";
    case Measure::cosine:
      return "cos";
  }
  return "unknown";
}

}  // namespace kgalign
