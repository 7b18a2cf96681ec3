#include "kgalign/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

namespace kgalign {

void validate(const SyntheticConfig& cfg) {
  if (cfg.n < 4) throw ArgumentError("synthetic benchmark needs n >= 4");
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(cfg.edge_prob) || !unit(cfg.name_noise) || !unit(cfg.edge_perturbation))
    throw ArgumentError("edge_prob, name_noise and edge_perturbation must lie in [0, 1]");
  if (cfg.relations < 1) throw ArgumentError("relations must be >= 1");
  if (cfg.vocabulary < 2 || cfg.tokens_per_name < 1 || cfg.vector_dim < 1)
    throw ArgumentError("vocabulary >= 2, tokens_per_name >= 1 and vector_dim >= 1 required");
  double combos = 1.0;
  for (int t = 0; t < cfg.tokens_per_name; ++t) combos *= static_cast<double>(cfg.vocabulary);
  if (combos < 2.0 * static_cast<double>(cfg.n))
    throw ArgumentError("vocabulary too small for distinct names");
}

namespace {

using Edge = std::pair<Index, Index>;  // first < second

std::string random_word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(4, 8);
  std::uniform_int_distribution<int> letter(0, 25);
  std::string w(static_cast<std::size_t>(len(rng)), 'a');
  for (char& c : w) c = static_cast<char>('a' + letter(rng));
  return w;
}

/// Per character: with probability p apply one of substitute, delete, insert.
std::string add_noise(const std::string& s, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution hit(p);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<int> letter(0, 25);
  std::string out;
  for (char c : s) {
    if (c == ' ' || !hit(rng)) {
      out.push_back(c);
      continue;
    }
    switch (kind(rng)) {
      case 0:
        out.push_back(static_cast<char>('a' + letter(rng)));
        break;
      case 1:
        break;
      default:
        out.push_back(c);
        out.push_back(static_cast<char>('a' + letter(rng)));
    }
  }
  if (out.empty()) out = s;
  return out;
}

KnowledgeGraph build(const std::string& prefix, const std::vector<Index>& order,
                     const std::vector<std::pair<Edge, int>>& edges,
                     const std::vector<std::string>& names, int relations) {
  // order[k] is the entity listed k-th; edges refer to those same labels.
  IdMap entities;
  std::vector<std::string> ordered_names;
  std::vector<Index> slot(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    slot[static_cast<std::size_t>(order[k])] = entities.insert_unique(prefix + std::to_string(k));
    ordered_names.push_back(names[static_cast<std::size_t>(order[k])]);
  }
  IdMap rels;
  for (int r = 0; r < relations; ++r) rels.intern("rel" + std::to_string(r));
  std::vector<Triple> triples;
  triples.reserve(edges.size());
  for (const auto& [e, r] : edges)
    triples.push_back({slot[static_cast<std::size_t>(e.first)], r,
                       slot[static_cast<std::size_t>(e.second)]});
  return {std::move(entities), std::move(rels), std::move(triples), std::move(ordered_names)};
}

}  // namespace

SyntheticBenchmark gen_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  const Index n = cfg.n;

  std::vector<std::string> vocab;
  std::unordered_set<std::string> seen;
  while (static_cast<Index>(vocab.size()) < cfg.vocabulary)
    if (auto w = random_word(rng); seen.insert(w).second) vocab.push_back(std::move(w));

  std::vector<std::string> names1;
  std::unordered_set<std::string> used_names;
  std::uniform_int_distribution<Index> pick_word(0, cfg.vocabulary - 1);
  while (static_cast<Index>(names1.size()) < n) {
    std::string name;
    for (int t = 0; t < cfg.tokens_per_name; ++t) {
      if (t > 0) name += ' ';
      name += vocab[static_cast<std::size_t>(pick_word(rng))];
    }
    if (used_names.insert(name).second) names1.push_back(std::move(name));
  }

  std::uniform_int_distribution<int> pick_rel(0, cfg.relations - 1);
  std::bernoulli_distribution has_edge(cfg.edge_prob);
  std::vector<std::pair<Edge, int>> edges1;
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (has_edge(rng)) edges1.push_back({{a, b}, pick_rel(rng)});

  // Rewire: drop a fraction of edges and add as many new non-edges.
  std::set<Edge> present;
  for (const auto& [e, r] : edges1) present.insert(e);
  std::vector<std::pair<Edge, int>> edges2;
  std::bernoulli_distribution drop(cfg.edge_perturbation);
  std::size_t dropped = 0;
  for (const auto& er : edges1) {
    if (drop(rng)) {
      ++dropped;
    } else {
      edges2.push_back(er);
    }
  }
  const std::size_t max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  std::uniform_int_distribution<Index> pick_entity(0, n - 1);
  while (dropped > 0 && present.size() < max_edges) {
    const Index a = pick_entity(rng);
    const Index b = pick_entity(rng);
    if (a == b) continue;
    const Edge e = std::minmax(a, b);
    if (!present.insert(e).second) continue;
    edges2.push_back({e, pick_rel(rng)});
    --dropped;
  }

  std::vector<std::string> names2;
  names2.reserve(names1.size());
  for (const auto& s : names1) names2.push_back(add_noise(s, cfg.name_noise, rng));

  std::vector<Index> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), Index{0});
  std::vector<Index> order2 = identity;
  std::shuffle(order2.begin(), order2.end(), rng);

  SyntheticBenchmark out;
  out.kg1 = build("kg1/e", identity, edges1, names1, cfg.relations);
  out.kg2 = build("kg2/e", order2, edges2, names2, cfg.relations);
  std::vector<Index> position(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) position[static_cast<std::size_t>(order2[static_cast<std::size_t>(k)])] = k;
  for (Index i = 0; i < n; ++i) out.gold.push_back({i, position[static_cast<std::size_t>(i)]});

  std::normal_distribution<double> gauss(0.0, 1.0);
  out.vectors = WordVectorTable(cfg.vector_dim);
  for (const auto& w : vocab) {
    VectorXd v(cfg.vector_dim);
    for (Index k = 0; k < cfg.vector_dim; ++k) v(k) = gauss(rng);
    out.vectors.add(w, v);
  }
  return out;
}

void save_synthetic(const SyntheticBenchmark& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_kg(b.kg1, dir / "kg1_triples.tsv", dir / "kg1_names.tsv");
  save_kg(b.kg2, dir / "kg2_triples.tsv", dir / "kg2_names.tsv");

  std::vector<IdPair> gold;
  for (const auto& p : b.gold)
    gold.emplace_back(b.kg1.entities().id(p.source), b.kg2.entities().id(p.target));
  std::ofstream align(dir / "alignment.tsv");
  write_alignment(gold, align);

  std::ofstream vec(dir / "vectors.vec");
  vec << std::setprecision(std::numeric_limits<double>::max_digits10);
  vec << b.vectors.size() << ' ' << b.vectors.dim() << '\n';
  for (const auto& token : b.vectors.tokens()) {
    const double* v = b.vectors.find(token);
    vec << token;
    for (Index k = 0; k < b.vectors.dim(); ++k) vec << ' ' << v[k];
    vec << '\n';
  }
  if (!align || !vec) throw Error("cannot write synthetic benchmark to " + dir.string());
}

}  // namespace kgalign
