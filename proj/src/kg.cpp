#include "kgalign/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kgalign/text.hpp"

namespace kgalign {

Index IdMap::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  const Index idx = size();
  ids_.emplace_back(id);
  index_.emplace(ids_.back(), idx);
  return idx;
}

Index IdMap::insert_unique(std::string_view id) {
  if (find(id) != kNoIndex) throw IntegrityError("duplicate id '" + std::string(id) + "'");
  return intern(id);
}

Index IdMap::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? kNoIndex : it->second;
}

Index IdMap::at(std::string_view id) const {
  const Index i = find(id);
  if (i == kNoIndex) throw IntegrityError("unknown id '" + std::string(id) + "'");
  return i;
}

KnowledgeGraph::KnowledgeGraph(IdMap entities, IdMap relations, std::vector<Triple> triples,
                               std::vector<std::string> names)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      triples_(std::move(triples)),
      names_(std::move(names)) {
  const Index n = entities_.size();
  if (static_cast<Index>(names_.size()) != n)
    throw IntegrityError("entity_names must hold one entry per entity");
  std::vector<std::set<Index>> adj(static_cast<std::size_t>(n));
  for (const auto& t : triples_) {
    if (t.head < 0 || t.head >= n || t.tail < 0 || t.tail >= n)
      throw IntegrityError("triple entity index out of range");
    if (t.relation < 0 || t.relation >= relations_.size())
      throw IntegrityError("triple relation index out of range");
    if (t.head == t.tail) continue;
    adj[static_cast<std::size_t>(t.head)].insert(t.tail);
    adj[static_cast<std::size_t>(t.tail)].insert(t.head);
  }
  neighbors_.reserve(adj.size());
  for (auto& s : adj) neighbors_.emplace_back(s.begin(), s.end());
}

const std::vector<Index>& KnowledgeGraph::neighbors(Index e) const {
  return neighbors_.at(static_cast<std::size_t>(e));
}

bool KnowledgeGraph::adjacent(Index a, Index b) const {
  const auto& n = neighbors(a);
  return std::binary_search(n.begin(), n.end(), b);
}

const std::vector<Index>& neighbors(const KnowledgeGraph& kg, Index e) {
  if (e < 0 || e >= kg.num_entities())
    throw ArgumentError("entity index " + std::to_string(e) + " out of range");
  return kg.neighbors(e);
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

KnowledgeGraph read_kg(std::istream& triples, std::istream& names,
                       const std::string& triples_label, const std::string& names_label) {
  IdMap entities;
  std::vector<std::string> entity_names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(names, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError(names_label, lineno, "expected 'id<TAB>name'");
    try {
      entities.insert_unique(line.substr(0, tab));
    } catch (const IntegrityError& e) {
      throw ParseError(names_label, lineno, e.what());
    }
    entity_names.push_back(line.substr(tab + 1));
  }

  IdMap relations;
  std::vector<Triple> parsed;
  lineno = 0;
  while (std::getline(triples, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3)
      throw ParseError(triples_label, lineno,
                       "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    const Index h = entities.find(cols[0]);
    const Index t = entities.find(cols[2]);
    if (h == kNoIndex || t == kNoIndex)
      throw IntegrityError(triples_label + ":" + std::to_string(lineno) + ": entity '" +
                           std::string(h == kNoIndex ? cols[0] : cols[2]) +
                           "' is absent from " + names_label);
    parsed.push_back({h, relations.intern(cols[1]), t});
  }
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(parsed),
                        std::move(entity_names));
}

KnowledgeGraph load_kg(const std::filesystem::path& triples_path,
                       const std::filesystem::path& names_path) {
  auto t = open_input(triples_path);
  auto n = open_input(names_path);
  return read_kg(t, n, triples_path.string(), names_path.string());
}

void write_kg(const KnowledgeGraph& kg, std::ostream& triples, std::ostream& names) {
  for (Index e = 0; e < kg.num_entities(); ++e)
    names << kg.entities().id(e) << '\t' << kg.name(e) << '\n';
  for (const auto& t : kg.triples())
    triples << kg.entities().id(t.head) << '\t' << kg.relations().id(t.relation) << '\t'
            << kg.entities().id(t.tail) << '\n';
}

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& triples_path,
             const std::filesystem::path& names_path) {
  auto t = open_output(triples_path);
  auto n = open_output(names_path);
  write_kg(kg, t, n);
}

std::vector<IdPair> read_alignment(std::istream& in, const std::string& label) {
  std::vector<IdPair> pairs;
  std::unordered_set<std::string> sources;
  std::unordered_set<std::string> targets;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2)
      throw ParseError(label, lineno, "expected 'source_id<TAB>target_id'");
    std::string s(cols[0]);
    std::string t(cols[1]);
    if (!sources.insert(s).second)
      throw IntegrityError(label + ":" + std::to_string(lineno) + ": duplicate source id '" +
                           s + "'");
    if (!targets.insert(t).second)
      throw IntegrityError(label + ":" + std::to_string(lineno) + ": duplicate target id '" +
                           t + "'");
    pairs.emplace_back(std::move(s), std::move(t));
  }
  return pairs;
}

std::vector<IdPair> load_alignment(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_alignment(in, path.string());
}

void write_alignment(const std::vector<IdPair>& pairs, std::ostream& out) {
  for (const auto& [s, t] : pairs) out << s << '\t' << t << '\n';
}

IndexPairs index_alignment(const std::vector<IdPair>& pairs, const KnowledgeGraph& kg1,
                           const KnowledgeGraph& kg2) {
  IndexPairs out;
  out.reserve(pairs.size());
  for (const auto& [s, t] : pairs) out.push_back({kg1.entities().at(s), kg2.entities().at(t)});
  return out;
}

AlignmentDataset split_alignment(const IndexPairs& pairs, double train_frac, double val_frac,
                                 std::uint64_t rng_seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0))
    throw ArgumentError("split fractions must be positive and sum to less than 1");
  IndexPairs shuffled = pairs;
  std::mt19937_64 rng(rng_seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const auto n = static_cast<double>(pairs.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * n));
  const auto n_val =
      std::min(static_cast<std::size_t>(std::llround(val_frac * n)), shuffled.size() - n_train);

  AlignmentDataset ds;
  const auto b = shuffled.begin();
  ds.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
  ds.val.assign(b + static_cast<std::ptrdiff_t>(n_train),
                b + static_cast<std::ptrdiff_t>(n_train + n_val));
  ds.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_val), shuffled.end());
  return ds;
}

AdjacencyMatrix raw_adjacency(const KnowledgeGraph& kg, const EdgeWeightFn& weight) {
  const Index n = kg.num_entities();
  std::map<std::pair<Index, Index>, double> cells;
  for (const auto& t : kg.triples()) {
    if (t.head == t.tail) continue;
    const auto key = std::minmax(t.head, t.tail);
    if (weight) {
      cells[key] += weight(t);
    } else {
      cells[key] = 1.0;
    }
  }
  std::vector<Eigen::Triplet<double, std::int64_t>> entries;
  entries.reserve(cells.size() * 2 + static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, 1.0);
  for (const auto& [key, w] : cells) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("edge weights must be finite and >= 0");
    entries.emplace_back(key.first, key.second, w);
    entries.emplace_back(key.second, key.first, w);
  }
  AdjacencyMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

AdjacencyMatrix normalize_adjacency(const AdjacencyMatrix& m) {
  VectorXd inv_sqrt(m.rows());
  for (Index i = 0; i < m.rows(); ++i) {
    double d = 0.0;
    for (AdjacencyMatrix::InnerIterator it(m, i); it; ++it) d += it.value();
    inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  AdjacencyMatrix out = m;
  for (Index i = 0; i < out.outerSize(); ++i)
    for (AdjacencyMatrix::InnerIterator it(out, i); it; ++it)
      it.valueRef() = it.value() * (inv_sqrt[it.row()] * inv_sqrt[it.col()]);
  return out;
}

AdjacencyMatrix adjacency(const KnowledgeGraph& kg, const EdgeWeightFn& weight) {
  return normalize_adjacency(raw_adjacency(kg, weight));
}

}  // namespace kgalign
