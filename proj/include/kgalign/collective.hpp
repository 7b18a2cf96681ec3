// Collective alignment decoding over a fused similarity matrix.
//
// Rows of the matrix are test source entities and columns test target
// entities ("local" indices). The decoders here are:
//   * preliminary_filter: iterated mutual top-1 confirmation,
//   * a2c_align: sequential decisions by an advantage actor-critic whose state
//     mixes local similarity, exclusiveness and coherence signals,
//   * greedy_independent / stable_matching / hungarian baselines.
#ifndef KGALIGN_COLLECTIVE_HPP_
#define KGALIGN_COLLECTIVE_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/simmat.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

enum class Provenance { none, preliminary, rl, greedy, stable, hungarian };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& name);

/// target[i] is the local target chosen for local source i, or kNoIndex.
struct AlignmentResult {
  std::vector<Index> target;
  std::vector<Provenance> provenance;

  static AlignmentResult unassigned(Index n_sources);
  Index size() const { return static_cast<Index>(target.size()); }
  void assign(Index source, Index tgt, Provenance p);
};

/// Sum of M(i, target[i]) over assigned sources.
double total_similarity(const AlignmentResult& r, const SimilarityMatrix& m);

struct Multiplicities {
  Index mulse = 0;  // sources sharing their target with another source
  Index multe = 0;  // targets assigned more than once
};

Multiplicities count_multiplicities(const AlignmentResult& r);

// ---------------------------------------------------------------------------
// Baselines

/// Row argmax; ties go to the lowest target index.
AlignmentResult greedy_independent(const SimilarityMatrix& m);

/// Source-proposing deferred acceptance. Preferences follow descending score
/// with ties broken by lower index. With more sources than targets the
/// surplus sources stay unassigned.
AlignmentResult stable_matching(const SimilarityMatrix& m);

/// Maximum-total-similarity assignment (O(n^3) shortest augmenting paths).
/// With more sources than targets the surplus sources stay unassigned.
AlignmentResult hungarian(const SimilarityMatrix& m);

// ---------------------------------------------------------------------------
// Preliminary treatment

struct PreliminaryResult {
  IndexPairs confirmed;  // local (source, target)
  std::vector<int> confirmed_round;
  std::vector<Index> residual_sources;  // ascending
  std::vector<Index> residual_targets;  // ascending
};

/// Per round: among the remaining rows/columns, confirm every pair that is
/// the top-1 of its row and of its column (lowest index on ties), then
/// remove those rows and columns.
PreliminaryResult preliminary_filter(const SimilarityMatrix& m, int rounds);

// ---------------------------------------------------------------------------
// Reinforcement-learning decoder

enum class RlMode { full, exclusiveness_only, coherence_only };

std::string to_string(RlMode m);
RlMode parse_rl_mode(const std::string& name);  // full | excl | coh

struct RlConfig {
  double gamma = 0.9;
  double actor_lr = 0.001;
  double critic_lr = 0.01;
  int tau = 10;
  int actor_hidden = 10;
  int critic_hidden = 10;
  int epochs = 500;
  std::uint64_t rng_seed = 0;
  int preliminary_rounds = 2;
  RlMode mode = RlMode::full;
  double init_range = 0.1;  // parameters start uniform in [-init_range, init_range]
};

void validate(const RlConfig& cfg);

/// Everything the sequential decoder sees.
struct AlignmentEnvironment {
  SimilarityMatrix m;                  // full local matrix
  std::vector<Index> source_entities;  // local row -> source-KG entity index
  std::vector<Index> target_entities;  // local col -> target-KG entity index
  std::vector<std::vector<Index>> source_neighbors;  // per source-KG entity, sorted
  std::vector<std::vector<Index>> target_neighbors;  // per target-KG entity, sorted
  IndexPairs context;                  // KG-index pairs known in advance (e.g. seeds)
  IndexPairs confirmed;                // local pairs fixed by the preliminary treatment
  std::vector<Index> residual_targets;
  std::vector<std::vector<Index>> candidates;  // per local source; empty unless residual
  std::vector<Index> order;                    // residual sources, processing order
  int tau = 0;                                 // effective candidate count

  Index n_sources() const { return m.rows(); }
};

/// Runs the preliminary filter, picks the top-tau residual candidates of
/// every residual source, and orders residual sources by their best
/// candidate score (descending, lower index first on ties).
AlignmentEnvironment make_environment(SimilarityMatrix fused, std::vector<Index> source_entities,
                                      std::vector<Index> target_entities,
                                      const KnowledgeGraph& source_kg,
                                      const KnowledgeGraph& target_kg, int tau,
                                      int preliminary_rounds, IndexPairs context = {});

struct StateVector {
  VectorXd s1;  // local similarity over candidates
  VectorXd s2;  // +1 unchosen, -1 chosen
  VectorXd s3;  // coherence counts
  VectorXd combined() const { return s1.cwiseProduct(s2) + s3; }
};

/// Counts, for every candidate of local source `source`, the contextual
/// targets (targets matched to already-matched neighbors of the source)
/// adjacent to it. `source_match` maps source-KG entity -> target-KG entity.
VectorXd coherence_vector(const AlignmentEnvironment& env, Index source,
                          const std::vector<Index>& source_match);

double reward(const StateVector& s, Index action);

struct ActorParameters {
  MatrixXd w1;  // h x tau
  VectorXd b1;
  MatrixXd w2;  // tau x h
  VectorXd b2;
};

struct CriticParameters {
  MatrixXd w3;  // h_c x tau
  VectorXd b3;
  MatrixXd w4;  // 1 x h_c
  VectorXd b4;  // size 1
};

ActorParameters init_actor(int tau, int hidden, double range, std::mt19937_64& rng);
CriticParameters init_critic(int tau, int hidden, double range, std::mt19937_64& rng);

/// softmax(W2 relu(W1 s + b1) + b2)
VectorXd actor_forward(const VectorXd& s, const ActorParameters& p);
/// W4 relu(W3 s + b3) + b4
double critic_value(const VectorXd& s, const CriticParameters& p);

/// Gradient of log pi(action | s) with respect to every actor parameter.
ActorParameters actor_log_prob_gradient(const VectorXd& s, Index action, const ActorParameters& p);
/// Gradient of V(s) with respect to every critic parameter.
CriticParameters critic_gradient(const VectorXd& s, const CriticParameters& p);

struct StepRecord {
  int epoch = 0;  // -1 for the final greedy pass
  Index source = 0;
  std::vector<Index> candidates;
  StateVector state;
  Index action = 0;
  double reward = 0.0;
  double td_error = 0.0;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct A2cRun {
  AlignmentResult alignment;
  ActorParameters actor;
  CriticParameters critic;
  std::vector<double> episode_rewards;
};

/// Trains for cfg.epochs episodes, then decodes with one argmax-policy
/// episode. Confirmed pairs are reported with preliminary provenance.
A2cRun run_a2c(const AlignmentEnvironment& env, const RlConfig& cfg,
               const StepObserver& observer = {});

AlignmentResult a2c_align(const AlignmentEnvironment& env, const RlConfig& cfg);

}  // namespace kgalign

#endif  // KGALIGN_COLLECTIVE_HPP_
