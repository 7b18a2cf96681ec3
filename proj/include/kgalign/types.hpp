// Core aliases and error types shared by every kgalign module.
#ifndef KGALIGN_TYPES_HPP_
#define KGALIGN_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kgalign {

using Index = std::int64_t;

/// Sentinel for "no target assigned".
inline constexpr Index kNoIndex = -1;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Row-per-entity dense embedding (structural Z or semantic N).
using EmbeddingMatrix = MatrixXd;

/// (source index, target index).
struct IndexPair {
  Index source = 0;
  Index target = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

using IndexPairs = std::vector<IndexPair>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class FusionError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgalign

#endif  // KGALIGN_TYPES_HPP_
