#include "kgalign/struct_embed.hpp"

#include <cmath>
#include <unordered_set>

namespace kgalign {

namespace {

struct PairHash {
  std::size_t operator()(const IndexPair& p) const noexcept {
    return std::hash<Index>()(p.source) * 1000003u ^ std::hash<Index>()(p.target);
  }
};

MatrixXd relu(const MatrixXd& m) { return m.cwiseMax(0.0); }

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

void normalize_rows(MatrixXd& x) {
  for (Index r = 0; r < x.rows(); ++r) {
    const double norm = x.row(r).norm();
    if (norm > 0.0) x.row(r) /= norm;
  }
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.dim < 1) throw ArgumentError("embedding dimension must be >= 1");
  if (!(cfg.margin > 0.0)) throw ArgumentError("margin must be > 0");
  if (cfg.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (cfg.negatives_per_positive < 1) throw ArgumentError("negatives per positive must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
}

MatrixXd truncated_normal(Index rows, Index cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    double z = 0.0;
    do {
      z = normal(rng);
    } while (std::abs(z) > 2.0 * sigma);
    m.data()[i] = z;
  }
  return m;
}

EmbeddingMatrix init_features(Index n, Index dim, std::mt19937_64& rng) {
  if (n < 1 || dim < 1) throw ArgumentError("init_features needs n >= 1 and dim >= 1");
  MatrixXd x = truncated_normal(n, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  normalize_rows(x);
  return x;
}

EmbeddingMatrix init_features(Index n, Index dim, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return init_features(n, dim, rng);
}

GcnParameters init_gcn_parameters(Index dim, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(2 * dim));
  std::uniform_real_distribution<double> uni(-limit, limit);
  GcnParameters p{MatrixXd(dim, dim), MatrixXd(dim, dim)};
  for (Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = uni(rng);
  for (Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = uni(rng);
  return p;
}

EmbeddingMatrix gcn_forward(const AdjacencyMatrix& adj, const EmbeddingMatrix& x,
                            const GcnParameters& params, Activation output_activation) {
  if (adj.rows() != x.rows() || adj.cols() != x.rows())
    throw ArgumentError("adjacency size does not match feature rows");
  if (params.w1.rows() != x.cols() || params.w2.rows() != params.w1.cols())
    throw ArgumentError("GCN weight shapes do not match feature dimension");
  const MatrixXd hidden = relu(adj * (x * params.w1));
  MatrixXd z = adj * (hidden * params.w2);
  if (output_activation == Activation::relu) z = relu(z);
  return z;
}

NegativeSamples sample_negatives(const IndexPairs& positives, int k, Index n_source,
                                 Index n_target, std::mt19937_64& rng) {
  if (k < 1) throw ArgumentError("negatives per positive must be >= 1");
  std::unordered_set<IndexPair, PairHash> positive_set(positives.begin(), positives.end());
  std::uniform_int_distribution<Index> pick_source(0, std::max<Index>(n_source - 1, 0));
  std::uniform_int_distribution<Index> pick_target(0, std::max<Index>(n_target - 1, 0));
  std::bernoulli_distribution coin(0.5);

  NegativeSamples out;
  out.per_positive = k;
  out.pairs.reserve(positives.size() * static_cast<std::size_t>(k));
  for (const auto& pos : positives) {
    for (int j = 0; j < k; ++j) {
      bool found = false;
      for (int attempt = 0; attempt < 64 && !found; ++attempt) {
        IndexPair cand = pos;
        if (coin(rng)) {
          cand.source = pick_source(rng);
        } else {
          cand.target = pick_target(rng);
        }
        if (!positive_set.contains(cand)) {
          out.pairs.push_back(cand);
          found = true;
        }
      }
      if (found) continue;
      // Dense pools: enumerate what is left and draw from it.
      IndexPairs pool;
      for (Index s = 0; s < n_source; ++s)
        if (IndexPair c{s, pos.target}; !positive_set.contains(c)) pool.push_back(c);
      for (Index t = 0; t < n_target; ++t)
        if (IndexPair c{pos.source, t}; !positive_set.contains(c)) pool.push_back(c);
      if (pool.empty())
        throw SamplingError("no corruption of positive (" + std::to_string(pos.source) + ", " +
                            std::to_string(pos.target) + ") avoids the positive set");
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      out.pairs.push_back(pool[pick(rng)]);
    }
  }
  return out;
}

double margin_loss(const EmbeddingMatrix& z1, const EmbeddingMatrix& z2,
                   const IndexPairs& positives, const NegativeSamples& negatives, double margin) {
  double loss = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& p = positives[i];
    const double d_pos = (z1.row(p.source) - z2.row(p.target)).lpNorm<1>();
    for (const auto& n : negatives.group(i)) {
      const double d_neg = (z1.row(n.source) - z2.row(n.target)).lpNorm<1>();
      loss += std::max(0.0, d_pos - d_neg + margin);
    }
  }
  return loss;
}

namespace {

struct ForwardCache {
  MatrixXd ax;      // A X
  MatrixXd pre;     // A X W1
  MatrixXd ah;      // A relu(pre)
  MatrixXd out_pre; // A relu(pre) W2
  MatrixXd z;
};

ForwardCache forward_cached(const AdjacencyMatrix& adj, const EmbeddingMatrix& x,
                            const GcnParameters& params, Activation act) {
  ForwardCache c;
  c.ax = adj * x;
  c.pre = c.ax * params.w1;
  c.ah = adj * relu(c.pre);
  c.out_pre = c.ah * params.w2;
  c.z = act == Activation::relu ? relu(c.out_pre) : c.out_pre;
  return c;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Adds dL/dW1 and dL/dW2 into `grad`; returns dL/dX.
MatrixXd accumulate_backward(const AdjacencyMatrix& adj, const ForwardCache& c, MatrixXd dz,
                             const GcnParameters& params, Activation act, GcnParameters& grad) {
  if (act == Activation::relu) dz = dz.cwiseProduct((c.out_pre.array() > 0.0).cast<double>().matrix());
  grad.w2.noalias() += c.ah.transpose() * dz;
  const MatrixXd d_ah = dz * params.w2.transpose();
  // A is symmetric, so A^T d = A d.
  MatrixXd d_pre = adj * d_ah;
  d_pre = d_pre.cwiseProduct((c.pre.array() > 0.0).cast<double>().matrix());
  grad.w1.noalias() += c.ax.transpose() * d_pre;
  return adj * (d_pre * params.w1.transpose());
}

}  // namespace

LossGradient margin_loss_gradient(const AdjacencyMatrix& adj1, const EmbeddingMatrix& x1,
                                  const AdjacencyMatrix& adj2, const EmbeddingMatrix& x2,
                                  const GcnParameters& params, const IndexPairs& positives,
                                  const NegativeSamples& negatives, double margin,
                                  Activation output_activation) {
  const ForwardCache c1 = forward_cached(adj1, x1, params, output_activation);
  const ForwardCache c2 = forward_cached(adj2, x2, params, output_activation);
  MatrixXd dz1 = MatrixXd::Zero(c1.z.rows(), c1.z.cols());
  MatrixXd dz2 = MatrixXd::Zero(c2.z.rows(), c2.z.cols());

  LossGradient out;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& p = positives[i];
    const VectorXd diff_pos = (c1.z.row(p.source) - c2.z.row(p.target)).transpose();
    const double d_pos = diff_pos.lpNorm<1>();
    for (const auto& n : negatives.group(i)) {
      const VectorXd diff_neg = (c1.z.row(n.source) - c2.z.row(n.target)).transpose();
      const double term = d_pos - diff_neg.lpNorm<1>() + margin;
      if (!(term > 0.0)) continue;
      out.loss += term;
      const VectorXd s_pos = diff_pos.unaryExpr(&sgn);
      const VectorXd s_neg = diff_neg.unaryExpr(&sgn);
      dz1.row(p.source) += s_pos.transpose();
      dz2.row(p.target) -= s_pos.transpose();
      dz1.row(n.source) -= s_neg.transpose();
      dz2.row(n.target) += s_neg.transpose();
    }
  }

  out.grad.w1 = MatrixXd::Zero(params.w1.rows(), params.w1.cols());
  out.grad.w2 = MatrixXd::Zero(params.w2.rows(), params.w2.cols());
  out.dx1 = accumulate_backward(adj1, c1, std::move(dz1), params, output_activation, out.grad);
  out.dx2 = accumulate_backward(adj2, c2, std::move(dz2), params, output_activation, out.grad);
  return out;
}

TrainResult train(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const IndexPairs& seeds,
                  const TrainConfig& cfg) {
  validate(cfg);
  if (seeds.empty()) throw ArgumentError("training needs at least one seed pair");
  std::mt19937_64 rng(cfg.rng_seed);
  const AdjacencyMatrix adj1 = adjacency(kg1);
  const AdjacencyMatrix adj2 = adjacency(kg2);
  EmbeddingMatrix x1 = init_features(kg1.num_entities(), cfg.dim, rng);
  EmbeddingMatrix x2 = init_features(kg2.num_entities(), cfg.dim, rng);

  TrainResult result;
  result.params = init_gcn_parameters(cfg.dim, rng);
  const double terms =
      static_cast<double>(seeds.size()) * static_cast<double>(cfg.negatives_per_positive);

  NegativeSamples negatives;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch == 0 || cfg.resample_negatives)
      negatives = sample_negatives(seeds, cfg.negatives_per_positive, kg1.num_entities(),
                                   kg2.num_entities(), rng);
    const LossGradient lg = margin_loss_gradient(adj1, x1, adj2, x2, result.params, seeds,
                                                 negatives, cfg.margin, cfg.output_activation);
    if (!std::isfinite(lg.loss)) throw TrainingError("loss became non-finite", epoch);
    result.loss_history.push_back(lg.loss);
    const double step = cfg.learning_rate / terms;
    result.params.w1 -= step * lg.grad.w1;
    result.params.w2 -= step * lg.grad.w2;
    if (cfg.train_features) {
      x1 -= step * lg.dx1;
      x2 -= step * lg.dx2;
      // Back onto the unit sphere; unbounded feature rows let the product
      // X W1 W2 run away on small sparse graphs.
      normalize_rows(x1);
      normalize_rows(x2);
    }
    if (!all_finite(result.params.w1) || !all_finite(result.params.w2) || !all_finite(x1) ||
        !all_finite(x2))
      throw TrainingError("parameters became non-finite", epoch);
  }
  result.z1 = gcn_forward(adj1, x1, result.params, cfg.output_activation);
  result.z2 = gcn_forward(adj2, x2, result.params, cfg.output_activation);
  result.x1 = std::move(x1);
  result.x2 = std::move(x2);
  if (!result.z1.allFinite() || !result.z2.allFinite())
    throw TrainingError("embeddings became non-finite", cfg.epochs);
  return result;
}

}  // namespace kgalign
