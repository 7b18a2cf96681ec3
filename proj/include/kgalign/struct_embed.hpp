// Two-layer GCN encoder with weights shared across both graphs, trained with
// an L1 margin ranking loss over seed alignments.
#ifndef KGALIGN_STRUCT_EMBED_HPP_
#define KGALIGN_STRUCT_EMBED_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

enum class Activation { identity, relu };

/// Layer weights W1, W2 (d_s x d_s). One object serves both graphs.
struct GcnParameters {
  MatrixXd w1;
  MatrixXd w2;
};

struct TrainConfig {
  Index dim = 300;
  double margin = 3.0;
  int epochs = 300;
  int negatives_per_positive = 5;
  double learning_rate = 1.0;
  std::uint64_t rng_seed = 0;
  Activation output_activation = Activation::identity;
  /// Draw fresh negatives every epoch; false keeps the first draw.
  bool resample_negatives = true;
  /// Also update the input features X of both graphs. Without this the
  /// random features of the two graphs stay unrelated and only the seed
  /// entities themselves can be pulled together.
  bool train_features = true;
};

void validate(const TrainConfig& cfg);

/// Raw truncated-normal samples: N(0, sigma^2) conditioned on |z| <= 2 sigma.
MatrixXd truncated_normal(Index rows, Index cols, double sigma, std::mt19937_64& rng);

/// Truncated normal with sigma = 1/sqrt(d_s), then unit L2 norm per row.
EmbeddingMatrix init_features(Index n, Index dim, std::mt19937_64& rng);
EmbeddingMatrix init_features(Index n, Index dim, std::uint64_t rng_seed);

/// Glorot-uniform weights.
GcnParameters init_gcn_parameters(Index dim, std::mt19937_64& rng);

/// Z = act(A relu(A X W1) W2).
EmbeddingMatrix gcn_forward(const AdjacencyMatrix& adj, const EmbeddingMatrix& x,
                            const GcnParameters& params,
                            Activation output_activation = Activation::identity);

/// k corrupted pairs per positive, stored contiguously: the negatives of
/// positive i are pairs[i*k, (i+1)*k).
struct NegativeSamples {
  int per_positive = 0;
  IndexPairs pairs;

  std::span<const IndexPair> group(std::size_t i) const {
    return {pairs.data() + i * static_cast<std::size_t>(per_positive),
            static_cast<std::size_t>(per_positive)};
  }
};

/// Each negative replaces exactly one side of its positive with a uniformly
/// drawn entity, never producing a pair from `positives`.
NegativeSamples sample_negatives(const IndexPairs& positives, int k, Index n_source,
                                 Index n_target, std::mt19937_64& rng);

/// Sum over positives and their negatives of
/// max(0, |u - v|_1 - |u' - v'|_1 + margin).
double margin_loss(const EmbeddingMatrix& z1, const EmbeddingMatrix& z2,
                   const IndexPairs& positives, const NegativeSamples& negatives, double margin);

struct LossGradient {
  double loss = 0.0;
  GcnParameters grad;  // dL/dW1, dL/dW2 summed over both graphs
  MatrixXd dx1;        // dL/dX1
  MatrixXd dx2;        // dL/dX2
};

/// Loss and its analytic gradient through both GCN layers. Subgradients of
/// |.| and of the hinge are taken as 0 at the kink.
LossGradient margin_loss_gradient(const AdjacencyMatrix& adj1, const EmbeddingMatrix& x1,
                                  const AdjacencyMatrix& adj2, const EmbeddingMatrix& x2,
                                  const GcnParameters& params, const IndexPairs& positives,
                                  const NegativeSamples& negatives, double margin,
                                  Activation output_activation = Activation::identity);

struct TrainResult {
  EmbeddingMatrix z1;
  EmbeddingMatrix z2;
  GcnParameters params;
  EmbeddingMatrix x1;  // final input features
  EmbeddingMatrix x2;
  std::vector<double> loss_history;  // loss before each epoch's update
};

/// Full-batch gradient descent on W1, W2 and (with train_features) X1, X2.
/// Each step moves against the gradient of the mean hinge term
/// (loss / number of terms), which rescales the step only. Updated feature
/// rows are projected back to unit norm after every step.
TrainResult train(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const IndexPairs& seeds,
                  const TrainConfig& cfg);

}  // namespace kgalign

#endif  // KGALIGN_STRUCT_EMBED_HPP_
