// Helpers shared by the unit tests and the acceptance suite.
#ifndef KGALIGN_TESTS_SUPPORT_HPP_
#define KGALIGN_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/collective.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/struct_embed.hpp"

namespace kgalign::testing {

/// Graph over entities "<prefix>0".."<prefix>n-1" named like their ids, with
/// the given undirected edges on relation "r".
inline KnowledgeGraph make_graph(const std::vector<std::string>& ids,
                                 const std::vector<std::pair<Index, Index>>& edges) {
  IdMap entities;
  for (const auto& id : ids) entities.insert_unique(id);
  IdMap relations;
  relations.intern("r");
  std::vector<Triple> triples;
  for (const auto& [a, b] : edges) triples.push_back({a, 0, b});
  return {std::move(entities), std::move(relations), std::move(triples), ids};
}

inline KnowledgeGraph random_graph(Index n, double p, std::mt19937_64& rng,
                                   const std::string& prefix = "e") {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<Index, Index>> edges;
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (edge(rng)) edges.emplace_back(a, b);
  return make_graph(ids, edges);
}

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Central differences of f over every entry of `param`, which f reads.
template <typename Mat>
Eigen::VectorXd numeric_gradient(Mat& param, const std::function<double()>& f, double h) {
  Eigen::VectorXd g(param.size());
  for (Index k = 0; k < param.size(); ++k) {
    const double orig = param.data()[k];
    param.data()[k] = orig + h;
    const double up = f();
    param.data()[k] = orig - h;
    const double down = f();
    param.data()[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

template <typename Mat>
Eigen::VectorXd flat(const Mat& m) {
  Eigen::VectorXd v(m.size());
  for (Index k = 0; k < m.size(); ++k) v[k] = m.data()[k];
  return v;
}

struct GcnGradientCase {
  double worst = 0.0;  // largest relative error over W1, W2, X1, X2
};

/// Random two-graph instance; compares the analytic margin-loss gradient
/// with central differences.
inline GcnGradientCase gcn_gradient_check(std::uint64_t seed, Activation act = Activation::identity) {
  std::mt19937_64 rng(seed);
  const Index n1 = 6;
  const Index n2 = 7;
  const Index dim = 4;
  const auto kg1 = random_graph(n1, 0.4, rng, "a");
  const auto kg2 = random_graph(n2, 0.4, rng, "b");
  const auto adj1 = adjacency(kg1);
  const auto adj2 = adjacency(kg2);
  EmbeddingMatrix x1 = init_features(n1, dim, rng);
  EmbeddingMatrix x2 = init_features(n2, dim, rng);
  GcnParameters params = init_gcn_parameters(dim, rng);
  const IndexPairs seeds = {{0, 1}, {2, 3}, {4, 0}};
  const auto negatives = sample_negatives(seeds, 3, n1, n2, rng);
  // Large margin keeps every hinge active so the loss is smooth almost surely.
  const double margin = 10.0;

  const auto lg = margin_loss_gradient(adj1, x1, adj2, x2, params, seeds, negatives, margin, act);
  auto loss = [&] {
    return margin_loss(gcn_forward(adj1, x1, params, act), gcn_forward(adj2, x2, params, act),
                       seeds, negatives, margin);
  };
  const double h = 1e-5;
  GcnGradientCase out;
  out.worst = std::max(out.worst, relative_error(flat(lg.grad.w1), numeric_gradient(params.w1, loss, h)));
  out.worst = std::max(out.worst, relative_error(flat(lg.grad.w2), numeric_gradient(params.w2, loss, h)));
  out.worst = std::max(out.worst, relative_error(flat(lg.dx1), numeric_gradient(x1, loss, h)));
  out.worst = std::max(out.worst, relative_error(flat(lg.dx2), numeric_gradient(x2, loss, h)));
  return out;
}

/// Largest relative error of the actor log-probability gradient and the
/// critic value gradient on a random state.
inline double a2c_gradient_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int tau = 2 + static_cast<int>(seed % 5);
  const int hidden = 3 + static_cast<int>(seed % 4);
  ActorParameters actor = init_actor(tau, hidden, 0.5, rng);
  CriticParameters critic = init_critic(tau, hidden, 0.5, rng);
  std::uniform_real_distribution<double> uni(-1.0, 2.0);
  Eigen::VectorXd s(tau);
  for (int k = 0; k < tau; ++k) s[k] = uni(rng);
  const Index action = static_cast<Index>(rng() % static_cast<std::uint64_t>(tau));

  const double h = 1e-5;
  auto log_pi = [&] { return std::log(actor_forward(s, actor)[action]); };
  auto value = [&] { return critic_value(s, critic); };
  const auto ga = actor_log_prob_gradient(s, action, actor);
  const auto gc = critic_gradient(s, critic);
  double worst = 0.0;
  worst = std::max(worst, relative_error(flat(ga.w1), numeric_gradient(actor.w1, log_pi, h)));
  worst = std::max(worst, relative_error(flat(ga.b1), numeric_gradient(actor.b1, log_pi, h)));
  worst = std::max(worst, relative_error(flat(ga.w2), numeric_gradient(actor.w2, log_pi, h)));
  worst = std::max(worst, relative_error(flat(ga.b2), numeric_gradient(actor.b2, log_pi, h)));
  worst = std::max(worst, relative_error(flat(gc.w3), numeric_gradient(critic.w3, value, h)));
  worst = std::max(worst, relative_error(flat(gc.b3), numeric_gradient(critic.b3, value, h)));
  worst = std::max(worst, relative_error(flat(gc.w4), numeric_gradient(critic.w4, value, h)));
  worst = std::max(worst, relative_error(flat(gc.b4), numeric_gradient(critic.b4, value, h)));
  return worst;
}

/// Similarity matrix of the four-entity example in the collective decoding
/// walkthrough. Rows u1..u4, columns v1..v4; the gold alignment is diagonal.
inline SimilarityMatrix figure_one_matrix() {
  MatrixXd m(4, 4);
  m << 0.9, 0.5, 0.1, 0.1,  //
      0.7, 0.6, 0.3, 0.1,   //
      0.2, 0.9, 0.4, 0.1,   //
      0.1, 0.7, 0.2, 0.6;
  return {m, FeatureTag::fused};
}

/// The graphs around that example. Entity 4 on each side ("a", "b") is a
/// known seed pair; u2 links to a, v2 links to b.
struct FigureOne {
  KnowledgeGraph kg1;
  KnowledgeGraph kg2;
  IndexPairs context;
};

inline FigureOne figure_one_graphs() {
  return {make_graph({"u1", "u2", "u3", "u4", "a"}, {{0, 1}, {1, 4}, {2, 3}}),
          make_graph({"v1", "v2", "v3", "v4", "b"}, {{0, 1}, {1, 4}, {1, 3}}),
          {{4, 4}}};
}

inline int count_diagonal(const AlignmentResult& r) {
  int correct = 0;
  for (Index i = 0; i < r.size(); ++i)
    if (r.target[static_cast<std::size_t>(i)] == i) ++correct;
  return correct;
}

/// Three 3x3 feature matrices for the fusion walkthrough (theta1 = 0.95).
///   structural: confident (0,0) 0.8 and (1,1) 0.7
///   semantic:   confident (1,1) 0.96 and (2,2) 0.6
///   string:     confident (0,0) 0.9
/// (0,0) is shared by two features, (1,1) is shared with one copy above
/// theta1, (2,2) is unique.
inline std::vector<SimilarityMatrix> fusion_walkthrough() {
  MatrixXd st(3, 3), se(3, 3), sg(3, 3);
  st << 0.8, 0.1, 0.1,  //
      0.2, 0.7, 0.1,    //
      0.3, 0.3, 0.3;
  se << 0.5, 0.5, 0.1,  //
      0.1, 0.96, 0.2,   //
      0.1, 0.2, 0.6;
  sg << 0.9, 0.1, 0.2,  //
      0.1, 0.4, 0.4,    //
      0.1, 0.1, 0.3;
  return {{st, FeatureTag::structural}, {se, FeatureTag::semantic}, {sg, FeatureTag::string}};
}

inline FusionConfig fusion_walkthrough_config() {
  FusionConfig cfg;
  cfg.theta1 = 0.95;
  cfg.theta2 = 0.48;
  return cfg;
}

/// Residual-free environment for the four-entity example.
inline AlignmentEnvironment figure_one_environment(int tau = 10, int preliminary_rounds = 0) {
  const auto g = figure_one_graphs();
  return make_environment(figure_one_matrix(), {0, 1, 2, 3}, {0, 1, 2, 3}, g.kg1, g.kg2, tau,
                          preliminary_rounds, g.context);
}

/// Number of blocking pairs of a (partial) matching. Preferences are
/// descending score with the lower index winning ties; an unmatched agent
/// prefers any partner.
inline int count_blocking_pairs(const SimilarityMatrix& m, const AlignmentResult& r) {
  std::vector<Index> owner(static_cast<std::size_t>(m.cols()), kNoIndex);
  for (Index i = 0; i < r.size(); ++i)
    if (const Index t = r.target[static_cast<std::size_t>(i)]; t != kNoIndex)
      owner[static_cast<std::size_t>(t)] = i;
  auto source_prefers = [&](Index i, Index t, Index current) {
    if (current == kNoIndex) return true;
    return m.scores(i, t) > m.scores(i, current) || (m.scores(i, t) == m.scores(i, current) && t < current);
  };
  auto target_prefers = [&](Index t, Index i, Index current) {
    if (current == kNoIndex) return true;
    return m.scores(i, t) > m.scores(current, t) || (m.scores(i, t) == m.scores(current, t) && i < current);
  };
  int blocking = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    const Index mine = r.target[static_cast<std::size_t>(i)];
    for (Index t = 0; t < m.cols(); ++t) {
      if (t == mine) continue;
      if (source_prefers(i, t, mine) && target_prefers(t, i, owner[static_cast<std::size_t>(t)]))
        ++blocking;
    }
  }
  return blocking;
}

/// Best total similarity over all injective assignments of the smaller side,
/// by enumeration.
inline double brute_force_assignment(const MatrixXd& m) {
  const bool transpose = m.rows() > m.cols();
  const MatrixXd a = transpose ? MatrixXd(m.transpose()) : m;
  std::vector<Index> cols(static_cast<std::size_t>(a.cols()));
  for (Index j = 0; j < a.cols(); ++j) cols[static_cast<std::size_t>(j)] = j;
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index i = 0; i < a.rows(); ++i) total += a(i, cols[static_cast<std::size_t>(i)]);
    best = std::max(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

/// Mutual-argmax rounds on explicit submatrix copies.
inline IndexPairs mutual_argmax_oracle(const MatrixXd& m, int rounds) {
  std::vector<Index> rows, cols;
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(i);
  for (Index j = 0; j < m.cols(); ++j) cols.push_back(j);
  IndexPairs out;
  for (int round = 0; round < rounds && !rows.empty() && !cols.empty(); ++round) {
    std::vector<std::vector<double>> sub(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) sub[a][b] = m(rows[a], cols[b]);
    std::vector<std::size_t> col_arg(cols.size());
    for (std::size_t b = 0; b < cols.size(); ++b) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < rows.size(); ++a)
        if (sub[a][b] > sub[best][b]) best = a;
      col_arg[b] = best;
    }
    std::vector<Index> keep_rows, drop_cols;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto b = static_cast<std::size_t>(std::max_element(sub[a].begin(), sub[a].end()) - sub[a].begin());
      if (col_arg[b] == a) {
        out.push_back({rows[a], cols[b]});
        drop_cols.push_back(cols[b]);
      } else {
        keep_rows.push_back(rows[a]);
      }
    }
    if (drop_cols.empty()) break;
    rows = keep_rows;
    std::erase_if(cols, [&](Index j) { return std::find(drop_cols.begin(), drop_cols.end(), j) != drop_cols.end(); });
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("kgalign_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kgalign::testing

#endif  // KGALIGN_TESTS_SUPPORT_HPP_
