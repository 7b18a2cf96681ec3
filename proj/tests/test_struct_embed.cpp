#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "kgalign/struct_embed.hpp"
#include "kgalign/synthetic.hpp"
#include "support.hpp"

using namespace kgalign;
using namespace kgalign::testing;

TEST_CASE("initial features have unit rows and are reproducible") {
  const auto x = init_features(50, 8, std::uint64_t{3});
  for (Index r = 0; r < x.rows(); ++r) CHECK(std::abs(x.row(r).norm() - 1.0) < 1e-9);
  CHECK(x == init_features(50, 8, std::uint64_t{3}));
  CHECK(x != init_features(50, 8, std::uint64_t{4}));
  CHECK_THROWS_AS(init_features(0, 8, std::uint64_t{3}), ArgumentError);
}

TEST_CASE("truncated normal samples") {
  std::mt19937_64 rng(11);
  const double sigma = 1.0 / std::sqrt(16.0);
  const auto raw = truncated_normal(1000, 16, sigma, rng);
  CHECK(raw.cwiseAbs().maxCoeff() <= 2.0 * sigma);
  const double bound = 4.0 * sigma / std::sqrt(1000.0);
  for (Index c = 0; c < raw.cols(); ++c) CHECK(std::abs(raw.col(c).mean()) < bound);
}

TEST_CASE("identity propagation returns the input") {
  AdjacencyMatrix eye(4, 4);
  eye.setIdentity();
  std::mt19937_64 rng(1);
  const MatrixXd x = init_features(4, 3, rng).cwiseAbs();
  const GcnParameters p{MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)};
  const auto z = gcn_forward(eye, x, p);
  CHECK((z - x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward pass matches a dense evaluation on a path") {
  const auto kg = make_graph({"a", "b", "c"}, {{0, 1}, {1, 2}});
  std::mt19937_64 rng(9);
  const MatrixXd x = init_features(3, 5, rng);
  const auto p = init_gcn_parameters(5, rng);

  Eigen::MatrixXd a(3, 3);
  a << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  const Eigen::VectorXd d = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd norm = d.asDiagonal() * a * d.asDiagonal();
  const Eigen::MatrixXd hidden = (norm * x * p.w1).cwiseMax(0.0);
  const Eigen::MatrixXd expected = norm * hidden * p.w2;

  const auto z = gcn_forward(adjacency(kg), x, p);
  CHECK(z.rows() == 3);
  CHECK(z.cols() == 5);
  CHECK((z - expected).cwiseAbs().maxCoeff() < 1e-10);

  const auto zr = gcn_forward(adjacency(kg), x, p, Activation::relu);
  CHECK((zr - expected.cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(gcn_forward(adjacency(kg), init_features(4, 5, rng), p), ArgumentError);
}

TEST_CASE("one parameter object drives both graphs") {
  std::mt19937_64 rng(2);
  const auto kg1 = random_graph(5, 0.5, rng);
  const auto kg2 = random_graph(6, 0.5, rng);
  const auto x1 = init_features(5, 4, rng);
  const auto x2 = init_features(6, 4, rng);
  auto p = init_gcn_parameters(4, rng);
  const auto before1 = gcn_forward(adjacency(kg1), x1, p);
  const auto before2 = gcn_forward(adjacency(kg2), x2, p);
  p.w2 *= 2.0;
  CHECK(gcn_forward(adjacency(kg1), x1, p) != before1);
  CHECK(gcn_forward(adjacency(kg2), x2, p) != before2);
}

TEST_CASE("permuting entities permutes embeddings") {
  std::mt19937_64 rng(4);
  const Index n = 8;
  const auto kg = random_graph(n, 0.4, rng);
  const auto x = init_features(n, 6, rng);
  const auto p = init_gcn_parameters(6, rng);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  // Entity i of the original becomes entity perm[i].
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = kg.entities().id(i);
  std::vector<std::pair<Index, Index>> edges;
  for (const auto& t : kg.triples())
    edges.emplace_back(perm[static_cast<std::size_t>(t.head)], perm[static_cast<std::size_t>(t.tail)]);
  const auto permuted = make_graph(ids, edges);
  MatrixXd px(n, 6);
  for (Index i = 0; i < n; ++i) px.row(perm[static_cast<std::size_t>(i)]) = x.row(i);

  const auto z = gcn_forward(adjacency(kg), x, p);
  const auto pz = gcn_forward(adjacency(permuted), px, p);
  for (Index i = 0; i < n; ++i)
    CHECK((pz.row(perm[static_cast<std::size_t>(i)]) - z.row(i)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("margin loss values") {
  // 1-D embeddings.
  MatrixXd z1(2, 1), z2(2, 1);
  z1 << 0.0, 5.0;
  z2 << 0.0, 0.0;
  NegativeSamples neg{1, {{1, 0}}};
  CHECK(margin_loss(z1, z2, {{0, 0}}, neg, 3.0) == 0.0);  // positive 0, negative 5 >= 3

  z1 << 1.0, 0.0;
  CHECK(margin_loss(z1, z2, {{0, 0}}, neg, 3.0) == doctest::Approx(4.0));  // 1 - 0 + 3
}

TEST_CASE("margin loss vanishes on separated embeddings") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 6;
    MatrixXd z1(n, 3);
    for (Index k = 0; k < z1.size(); ++k) z1.data()[k] = uni(rng);
    const MatrixXd z2 = z1;  // every positive (i, i) at distance 0
    IndexPairs pos;
    for (Index i = 0; i < n; ++i) pos.push_back({i, i});
    // Negatives far from every row: shift one coordinate by a big margin.
    MatrixXd z1b(n + 1, 3), z2b(n + 1, 3);
    z1b << z1, MatrixXd::Constant(1, 3, 100.0);
    z2b << z2, MatrixXd::Constant(1, 3, -100.0);
    NegativeSamples neg{2, {}};
    for (Index i = 0; i < n; ++i) {
      neg.pairs.push_back({n, i});
      neg.pairs.push_back({i, n});
    }
    REQUIRE(margin_loss(z1b, z2b, pos, neg, 3.0) == 0.0);
  }
}

TEST_CASE("negative sampling contract") {
  std::mt19937_64 rng(13);
  IndexPairs pos;
  for (Index i = 0; i < 100; ++i) pos.push_back({i, (i * 7) % 100});
  const auto neg = sample_negatives(pos, 5, 100, 100, rng);
  REQUIRE(neg.pairs.size() == 500);
  const std::set<IndexPair> positives(pos.begin(), pos.end());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (const auto& n : neg.group(i)) {
      const int changed = (n.source != pos[i].source) + (n.target != pos[i].target);
      CHECK(changed == 1);
      CHECK_FALSE(positives.contains(n));
    }
  }
  std::mt19937_64 a(21), b(21);
  CHECK(sample_negatives(pos, 5, 100, 100, a).pairs == sample_negatives(pos, 5, 100, 100, b).pairs);
}

TEST_CASE("negative sampling fails on an exhausted pool") {
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_negatives({{0, 0}}, 1, 1, 1, rng), SamplingError);
  // Two entities per side with both diagonal pairs positive leaves only the
  // off-diagonal corruptions, which the fallback must find.
  const auto neg = sample_negatives({{0, 0}, {1, 1}}, 4, 2, 2, rng);
  for (const auto& n : neg.pairs) CHECK(n.source != n.target);
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(gcn_gradient_check(seed).worst < 1e-4);
    CHECK(gcn_gradient_check(seed + 100, Activation::relu).worst < 1e-4);
  }
}

TEST_CASE("training reduces the loss on isomorphic graphs") {
  const std::vector<std::pair<Index, Index>> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0},
                                                      {0, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9},
                                                      {9, 5}, {2, 7}};
  std::vector<std::string> a_ids, b_ids;
  for (int i = 0; i < 10; ++i) {
    a_ids.push_back("a" + std::to_string(i));
    b_ids.push_back("b" + std::to_string(i));
  }
  const auto kg1 = make_graph(a_ids, edges);
  const auto kg2 = make_graph(b_ids, edges);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 50;
  cfg.rng_seed = 5;
  cfg.learning_rate = 0.3;  // the default step oscillates on a 10-node graph
  const auto result = train(kg1, kg2, {{0, 0}, {2, 2}, {4, 4}, {6, 6}, {8, 8}}, cfg);
  REQUIRE(result.loss_history.size() == 50);
  CHECK(result.loss_history.back() < result.loss_history.front());
  CHECK(result.z1.rows() == 10);
  CHECK(result.z1.cols() == 16);
  CHECK(result.z1.allFinite());

  // Same seed, same result.
  const auto again = train(kg1, kg2, {{0, 0}, {2, 2}, {4, 4}, {6, 6}, {8, 8}}, cfg);
  CHECK(again.z1 == result.z1);

  cfg.epochs = 0;
  CHECK_THROWS_AS(train(kg1, kg2, {{0, 0}}, cfg), ArgumentError);
  cfg.epochs = 5;
  CHECK_THROWS_AS(train(kg1, kg2, {}, cfg), ArgumentError);
}

TEST_CASE("default settings reduce the loss on a planted benchmark") {
  SyntheticConfig sc;
  sc.n = 200;
  sc.rng_seed = 7;
  const auto b = gen_synthetic(sc);
  const auto split = split_alignment(b.gold, 0.24, 0.06, 11);
  TrainConfig cfg;
  cfg.dim = 64;
  cfg.epochs = 100;
  const auto r = train(b.kg1, b.kg2, split.train, cfg);
  double tail = 0.0;
  for (std::size_t e = r.loss_history.size() - 10; e < r.loss_history.size(); ++e) tail += r.loss_history[e];
  CHECK(tail / 10.0 < 0.5 * r.loss_history.front());
  for (Index i = 0; i < r.x1.rows(); ++i) REQUIRE(std::abs(r.x1.row(i).norm() - 1.0) < 1e-9);
}

TEST_CASE("frozen features leave X untouched") {
  const auto kg1 = make_graph({"a", "b", "c"}, {{0, 1}, {1, 2}});
  const auto kg2 = make_graph({"x", "y", "z"}, {{0, 1}, {1, 2}});
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 3;
  cfg.train_features = false;
  cfg.resample_negatives = false;
  const auto r = train(kg1, kg2, {{0, 0}, {2, 2}}, cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  CHECK(r.x1 == init_features(3, 4, rng));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.margin = 0.0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.negatives_per_positive = 0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.dim = 0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
}
