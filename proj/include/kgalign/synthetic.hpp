// Planted-alignment benchmark generator.
//
// A random graph is duplicated. The copy gets its edges perturbed,
// character-level noise in its names and fresh, shuffled entity ids, so the
// gold alignment is the identity under a hidden permutation.
#ifndef KGALIGN_SYNTHETIC_HPP_
#define KGALIGN_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/name_features.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

struct SyntheticConfig {
  Index n = 200;
  double edge_prob = 0.03;          // independent probability of each undirected edge
  double name_noise = 0.1;          // per-character edit probability on target names
  double edge_perturbation = 0.1;   // fraction of target edges rewired
  int relations = 4;
  Index vocabulary = 60;            // distinct name tokens
  int tokens_per_name = 2;
  Index vector_dim = 16;
  std::uint64_t rng_seed = 0;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticBenchmark {
  KnowledgeGraph kg1;
  KnowledgeGraph kg2;
  IndexPairs gold;  // one pair per source entity, in source order
  WordVectorTable vectors;
};

SyntheticBenchmark gen_synthetic(const SyntheticConfig& cfg);

/// Writes kg{1,2}_triples.tsv, kg{1,2}_names.tsv, alignment.tsv and
/// vectors.vec into `dir`.
void save_synthetic(const SyntheticBenchmark& b, const std::filesystem::path& dir);

}  // namespace kgalign

#endif  // KGALIGN_SYNTHETIC_HPP_
