// Distance measures between embeddings and dense similarity matrices.
//
// All measures are free function templates over Eigen expressions so they
// accept rows, columns, maps and plain vectors of any floating scalar.
#ifndef KGALIGN_SIMMAT_HPP_
#define KGALIGN_SIMMAT_HPP_

#include <atomic>
#include <cmath>
#include <cstddef>
#include <string>

#include "kgalign/parallel.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

enum class FeatureTag { structural, semantic, string, fused };

std::string to_string(FeatureTag tag);
FeatureTag parse_feature_tag(const std::string& name);

enum class Measure { bray_curtis, manhattan, euclidean, cosine };

/// `per_coordinate` sums |u_i - v_i| / |u_i + v_i| over coordinates;
/// `textbook` is sum |u_i - v_i| / sum |u_i + v_i|.
enum class BrayCurtisForm { per_coordinate, textbook };

struct DistanceMeasure {
  Measure kind = Measure::bray_curtis;
  BrayCurtisForm bray_curtis_form = BrayCurtisForm::per_coordinate;
};

/// CLI names: bc, cos, man, euc.
DistanceMeasure parse_measure(const std::string& name);
std::string to_string(const DistanceMeasure& m);

/// Counts zero-denominator terms whose numerator was nonzero. Such terms
/// contribute 0 to the Bray-Curtis sum.
struct DistanceDiagnostics {
  std::atomic<std::size_t> zero_denominator_events{0};
};

template <typename Scalar>
struct BasicSimilarityMatrix {
  Matrix<Scalar> scores;
  FeatureTag tag = FeatureTag::fused;

  BasicSimilarityMatrix() = default;
  BasicSimilarityMatrix(Index n_src, Index n_tgt, FeatureTag t)
      : scores(Matrix<Scalar>::Zero(n_src, n_tgt)), tag(t) {}
  BasicSimilarityMatrix(Matrix<Scalar> s, FeatureTag t) : scores(std::move(s)), tag(t) {}

  Index rows() const { return scores.rows(); }
  Index cols() const { return scores.cols(); }
};

using SimilarityMatrix = BasicSimilarityMatrix<double>;

namespace detail {
template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size())
    throw ArgumentError("vector dimensions differ: " + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
}
}  // namespace detail

template <typename A, typename B>
typename A::Scalar bray_curtis(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v,
                               BrayCurtisForm form = BrayCurtisForm::per_coordinate,
                               DistanceDiagnostics* diag = nullptr) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(u, v);
  const Index n = u.size();
  if (form == BrayCurtisForm::textbook) {
    Scalar num = 0;
    Scalar den = 0;
    for (Index i = 0; i < n; ++i) {
      num += std::abs(u(i) - v(i));
      den += std::abs(u(i) + v(i));
    }
    if (den == Scalar(0)) {
      if (num != Scalar(0) && diag) ++diag->zero_denominator_events;
      return Scalar(0);
    }
    return num / den;
  }
  Scalar d = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar num = std::abs(u(i) - v(i));
    const Scalar den = std::abs(u(i) + v(i));
    if (den == Scalar(0)) {
      if (num != Scalar(0) && diag) ++diag->zero_denominator_events;
      continue;
    }
    d += num / den;
  }
  return d;
}

template <typename A, typename B>
typename A::Scalar manhattan(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(u, v);
  Scalar d = 0;
  for (Index i = 0; i < u.size(); ++i) d += std::abs(u(i) - v(i));
  return d;
}

template <typename A, typename B>
typename A::Scalar euclidean(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(u, v);
  Scalar sq = 0;
  for (Index i = 0; i < u.size(); ++i) {
    const Scalar d = u(i) - v(i);
    sq += d * d;
  }
  return std::sqrt(sq);
}

/// Zero vector on either side gives 0.
template <typename A, typename B>
typename A::Scalar cosine_sim(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(u, v);
  Scalar dot = 0;
  Scalar uu = 0;
  Scalar vv = 0;
  for (Index i = 0; i < u.size(); ++i) {
    dot += u(i) * v(i);
    uu += u(i) * u(i);
    vv += v(i) * v(i);
  }
  if (uu == Scalar(0) || vv == Scalar(0)) return Scalar(0);
  return dot / (std::sqrt(uu) * std::sqrt(vv));
}

/// Cosine as-is; 1 - D for the three distances. Not clamped.
template <typename A, typename B>
typename A::Scalar similarity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v,
                              const DistanceMeasure& m, DistanceDiagnostics* diag = nullptr) {
  using Scalar = typename A::Scalar;
  switch (m.kind) {
    case Measure::bray_curtis:
      return Scalar(1) - bray_curtis(u, v, m.bray_curtis_form, diag);
    case Measure::manhattan:
      return Scalar(1) - manhattan(u, v);
    case Measure::euclidean:
      return Scalar(1) - euclidean(u, v);
    case Measure::cosine:
      return cosine_sim(u, v);
  }
  throw ArgumentError("unknown distance measure");
}

/// Entry (i, j) = similarity(e1.row(i), e2.row(j)).
template <typename Scalar>
BasicSimilarityMatrix<Scalar> sim_matrix(const Matrix<Scalar>& e1, const Matrix<Scalar>& e2,
                                         const DistanceMeasure& m, FeatureTag tag,
                                         DistanceDiagnostics* diag = nullptr) {
  if (e1.cols() != e2.cols())
    throw ArgumentError("embedding dimensions differ: " + std::to_string(e1.cols()) + " vs " +
                        std::to_string(e2.cols()));
  BasicSimilarityMatrix<Scalar> out(e1.rows(), e2.rows(), tag);
  parallel_for(e1.rows(), [&](Index i) {
    for (Index j = 0; j < e2.rows(); ++j)
      out.scores(i, j) = similarity(e1.row(i), e2.row(j), m, diag);
  });
  return out;
}

/// Rows `rows` of `m`, in the given order.
template <typename Scalar, typename Indices>
Matrix<Scalar> gather_rows(const Matrix<Scalar>& m, const Indices& rows) {
  Matrix<Scalar> out(static_cast<Index>(rows.size()), m.cols());
  Index r = 0;
  for (auto i : rows) out.row(r++) = m.row(static_cast<Index>(i));
  return out;
}

}  // namespace kgalign

#endif  // KGALIGN_SIMMAT_HPP_
