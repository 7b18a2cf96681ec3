// Knowledge-graph data model, ingestion, splits and adjacency construction.
#ifndef KGALIGN_KG_HPP_
#define KGALIGN_KG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "kgalign/types.hpp"

namespace kgalign {

/// Bidirectional map between external ids and dense indices 0..size()-1.
class IdMap {
 public:
  /// Returns the existing index or appends a new one.
  Index intern(std::string_view id);
  /// Throws IntegrityError if the id is already present.
  Index insert_unique(std::string_view id);

  Index find(std::string_view id) const;  // kNoIndex when absent
  Index at(std::string_view id) const;    // throws IntegrityError when absent
  const std::string& id(Index i) const { return ids_.at(static_cast<std::size_t>(i)); }
  Index size() const { return static_cast<Index>(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> index_;
};

struct Triple {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;
};

/// One knowledge graph. Immutable after construction; the constructor checks
/// every structural invariant and precomputes undirected neighbor lists.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(IdMap entities, IdMap relations, std::vector<Triple> triples,
                 std::vector<std::string> names);

  const IdMap& entities() const { return entities_; }
  const IdMap& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(Index e) const { return names_.at(static_cast<std::size_t>(e)); }

  Index num_entities() const { return entities_.size(); }
  Index num_relations() const { return relations_.size(); }

  /// Sorted entity indices sharing a triple with `e` in either direction.
  const std::vector<Index>& neighbors(Index e) const;
  bool adjacent(Index a, Index b) const;

 private:
  IdMap entities_;
  IdMap relations_;
  std::vector<Triple> triples_;
  std::vector<std::string> names_;
  std::vector<std::vector<Index>> neighbors_;
};

/// Gold split. Pairs are (KG1 index, KG2 index).
struct AlignmentDataset {
  IndexPairs train;
  IndexPairs val;
  IndexPairs test;
};

using IdPair = std::pair<std::string, std::string>;

/// Loads a graph from a `head<TAB>rel<TAB>tail` triples file and an
/// `id<TAB>name` names file. Entity indices follow the names-file order,
/// relation indices follow first appearance in the triples file.
KnowledgeGraph load_kg(const std::filesystem::path& triples_path,
                       const std::filesystem::path& names_path);
KnowledgeGraph read_kg(std::istream& triples, std::istream& names,
                       const std::string& triples_label = "<triples>",
                       const std::string& names_label = "<names>");

/// Writes the graph back using its external ids.
void write_kg(const KnowledgeGraph& kg, std::ostream& triples, std::ostream& names);
void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& triples_path,
             const std::filesystem::path& names_path);

std::vector<IdPair> load_alignment(const std::filesystem::path& path);
std::vector<IdPair> read_alignment(std::istream& in, const std::string& label = "<alignment>");
void write_alignment(const std::vector<IdPair>& pairs, std::ostream& out);

/// Resolves external ids against both graphs.
IndexPairs index_alignment(const std::vector<IdPair>& pairs, const KnowledgeGraph& kg1,
                           const KnowledgeGraph& kg2);

/// Deterministic shuffle, then train/val sizes round(frac * n); the rest is test.
AlignmentDataset split_alignment(const IndexPairs& pairs, double train_frac, double val_frac,
                                 std::uint64_t rng_seed);

/// Symmetric sparse adjacency. Row-major so row scans stay cheap.
using AdjacencyMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

/// Weight of a single triple. Contributions of parallel triples between the
/// same pair are summed in both directions.
using EdgeWeightFn = std::function<double(const Triple&)>;

/// A + I with A undirected. Without `weight` the graph is binary.
AdjacencyMatrix raw_adjacency(const KnowledgeGraph& kg, const EdgeWeightFn& weight = {});

/// D^(-1/2) M D^(-1/2), D the row sums of M.
AdjacencyMatrix normalize_adjacency(const AdjacencyMatrix& with_self_loops);

/// Normalized neighborhood operator used by the GCN encoder.
AdjacencyMatrix adjacency(const KnowledgeGraph& kg, const EdgeWeightFn& weight = {});

/// Checked lookup; throws ArgumentError for out-of-range indices.
const std::vector<Index>& neighbors(const KnowledgeGraph& kg, Index e);

}  // namespace kgalign

#endif  // KGALIGN_KG_HPP_
