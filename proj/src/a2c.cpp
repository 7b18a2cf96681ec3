#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgalign/collective.hpp"

namespace kgalign {

std::string to_string(RlMode m) {
  switch (m) {
    case RlMode::full:
      return "full";
    case RlMode::exclusiveness_only:
      return "excl";
    case RlMode::coherence_only:
      return "coh";
  }
  return "full";
}

RlMode parse_rl_mode(const std::string& name) {
  if (name == "full") return RlMode::full;
  if (name == "excl" || name == "exclusiveness_only") return RlMode::exclusiveness_only;
  if (name == "coh" || name == "coherence_only") return RlMode::coherence_only;
  throw ArgumentError("unknown RL mode '" + name + "' (expected full, excl or coh)");
}

void validate(const RlConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ArgumentError("gamma must lie in [0, 1]");
  if (!(cfg.actor_lr > 0.0) || !(cfg.critic_lr > 0.0))
    throw ArgumentError("learning rates must be > 0");
  if (cfg.tau < 1) throw ArgumentError("tau must be >= 1");
  if (cfg.actor_hidden < 1 || cfg.critic_hidden < 1)
    throw ArgumentError("hidden sizes must be >= 1");
  if (cfg.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (cfg.preliminary_rounds < 0) throw ArgumentError("preliminary rounds must be >= 0");
}

AlignmentEnvironment make_environment(SimilarityMatrix fused, std::vector<Index> source_entities,
                                      std::vector<Index> target_entities,
                                      const KnowledgeGraph& source_kg,
                                      const KnowledgeGraph& target_kg, int tau,
                                      int preliminary_rounds, IndexPairs context) {
  if (tau < 1) throw ArgumentError("tau must be >= 1");
  if (static_cast<Index>(source_entities.size()) != fused.rows() ||
      static_cast<Index>(target_entities.size()) != fused.cols())
    throw ArgumentError("entity lists do not match the similarity matrix shape");
  for (Index e : source_entities)
    if (e < 0 || e >= source_kg.num_entities()) throw ArgumentError("source entity out of range");
  for (Index e : target_entities)
    if (e < 0 || e >= target_kg.num_entities()) throw ArgumentError("target entity out of range");

  AlignmentEnvironment env;
  env.m = std::move(fused);
  env.source_entities = std::move(source_entities);
  env.target_entities = std::move(target_entities);
  env.context = std::move(context);
  env.source_neighbors.resize(static_cast<std::size_t>(source_kg.num_entities()));
  for (Index e = 0; e < source_kg.num_entities(); ++e)
    env.source_neighbors[static_cast<std::size_t>(e)] = source_kg.neighbors(e);
  env.target_neighbors.resize(static_cast<std::size_t>(target_kg.num_entities()));
  for (Index e = 0; e < target_kg.num_entities(); ++e)
    env.target_neighbors[static_cast<std::size_t>(e)] = target_kg.neighbors(e);

  const auto pre = preliminary_filter(env.m, preliminary_rounds);
  env.confirmed = pre.confirmed;
  env.residual_targets = pre.residual_targets;
  env.tau = static_cast<int>(std::min<Index>(tau, static_cast<Index>(pre.residual_targets.size())));
  env.candidates.resize(static_cast<std::size_t>(env.m.rows()));
  if (env.tau == 0) return env;

  std::vector<double> best_score(static_cast<std::size_t>(env.m.rows()), 0.0);
  for (Index i : pre.residual_sources) {
    std::vector<Index> ranked = pre.residual_targets;
    const auto keep = static_cast<std::ptrdiff_t>(env.tau);
    std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(), [&](Index a, Index b) {
      const double sa = env.m.scores(i, a);
      const double sb = env.m.scores(i, b);
      return sa > sb || (sa == sb && a < b);
    });
    ranked.resize(static_cast<std::size_t>(env.tau));
    best_score[static_cast<std::size_t>(i)] = env.m.scores(i, ranked.front());
    env.candidates[static_cast<std::size_t>(i)] = std::move(ranked);
  }
  env.order = pre.residual_sources;
  std::stable_sort(env.order.begin(), env.order.end(), [&](Index a, Index b) {
    return best_score[static_cast<std::size_t>(a)] > best_score[static_cast<std::size_t>(b)];
  });
  return env;
}

VectorXd coherence_vector(const AlignmentEnvironment& env, Index source,
                          const std::vector<Index>& source_match) {
  const auto& cands = env.candidates.at(static_cast<std::size_t>(source));
  VectorXd s3 = VectorXd::Zero(static_cast<Index>(cands.size()));
  const Index entity = env.source_entities[static_cast<std::size_t>(source)];
  std::vector<Index> contextual;
  for (Index n : env.source_neighbors[static_cast<std::size_t>(entity)])
    if (const Index t = source_match[static_cast<std::size_t>(n)]; t != kNoIndex)
      contextual.push_back(t);
  std::sort(contextual.begin(), contextual.end());
  contextual.erase(std::unique(contextual.begin(), contextual.end()), contextual.end());
  if (contextual.empty()) return s3;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto& nbrs =
        env.target_neighbors[static_cast<std::size_t>(env.target_entities[static_cast<std::size_t>(cands[k])])];
    Index count = 0;
    for (Index t : contextual)
      if (std::binary_search(nbrs.begin(), nbrs.end(), t)) ++count;
    s3[static_cast<Index>(k)] = static_cast<double>(count);
  }
  return s3;
}

double reward(const StateVector& s, Index action) {
  if (action < 0 || action >= s.s1.size()) throw ArgumentError("action out of range");
  return s.s1[action] * s.s2[action] + s.s3[action];
}

namespace {

void fill_uniform(Eigen::Ref<MatrixXd> m, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-range, range);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = uni(rng);
}

VectorXd softmax(const VectorXd& logits) {
  const VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

}  // namespace

ActorParameters init_actor(int tau, int hidden, double range, std::mt19937_64& rng) {
  ActorParameters p{MatrixXd(hidden, tau), VectorXd(hidden), MatrixXd(tau, hidden), VectorXd(tau)};
  fill_uniform(p.w1, range, rng);
  fill_uniform(p.b1, range, rng);
  fill_uniform(p.w2, range, rng);
  fill_uniform(p.b2, range, rng);
  return p;
}

CriticParameters init_critic(int tau, int hidden, double range, std::mt19937_64& rng) {
  CriticParameters p{MatrixXd(hidden, tau), VectorXd(hidden), MatrixXd(1, hidden), VectorXd(1)};
  fill_uniform(p.w3, range, rng);
  fill_uniform(p.b3, range, rng);
  fill_uniform(p.w4, range, rng);
  fill_uniform(p.b4, range, rng);
  return p;
}

VectorXd actor_forward(const VectorXd& s, const ActorParameters& p) {
  if (s.size() != p.w1.cols()) throw ArgumentError("state size does not match actor input");
  const VectorXd h = (p.w1 * s + p.b1).cwiseMax(0.0);
  return softmax(p.w2 * h + p.b2);
}

double critic_value(const VectorXd& s, const CriticParameters& p) {
  if (s.size() != p.w3.cols()) throw ArgumentError("state size does not match critic input");
  const VectorXd h = (p.w3 * s + p.b3).cwiseMax(0.0);
  return (p.w4 * h)(0) + p.b4(0);
}

ActorParameters actor_log_prob_gradient(const VectorXd& s, Index action, const ActorParameters& p) {
  const VectorXd pre = p.w1 * s + p.b1;
  const VectorXd h = pre.cwiseMax(0.0);
  const VectorXd pi = softmax(p.w2 * h + p.b2);
  VectorXd d_logits = -pi;
  d_logits[action] += 1.0;
  const VectorXd d_h = p.w2.transpose() * d_logits;
  const VectorXd d_pre = d_h.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  return {d_pre * s.transpose(), d_pre, d_logits * h.transpose(), d_logits};
}

CriticParameters critic_gradient(const VectorXd& s, const CriticParameters& p) {
  const VectorXd pre = p.w3 * s + p.b3;
  const VectorXd h = pre.cwiseMax(0.0);
  const VectorXd d_pre = p.w4.row(0).transpose().cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  return {d_pre * s.transpose(), d_pre, h.transpose(), VectorXd::Ones(1)};
}

namespace {

bool finite(const ActorParameters& a, const CriticParameters& c) {
  return a.w1.allFinite() && a.b1.allFinite() && a.w2.allFinite() && a.b2.allFinite() &&
         c.w3.allFinite() && c.b3.allFinite() && c.w4.allFinite() && c.b4.allFinite();
}

/// Mutable per-episode view of the environment.
class Episode {
 public:
  Episode(const AlignmentEnvironment& env, RlMode mode, const std::vector<Index>& base_match)
      : env_(env),
        mode_(mode),
        match_(base_match),
        chosen_(static_cast<std::size_t>(env.m.cols()), 0) {}

  StateVector state(Index source) const {
    const auto& cands = env_.candidates[static_cast<std::size_t>(source)];
    const auto k = static_cast<Index>(cands.size());
    StateVector s{VectorXd(k), VectorXd::Ones(k), VectorXd::Zero(k)};
    for (Index c = 0; c < k; ++c) {
      const Index t = cands[static_cast<std::size_t>(c)];
      s.s1[c] = env_.m.scores(source, t);
      if (mode_ != RlMode::coherence_only && chosen_[static_cast<std::size_t>(t)]) s.s2[c] = -1.0;
    }
    if (mode_ != RlMode::exclusiveness_only) s.s3 = coherence_vector(env_, source, match_);
    return s;
  }

  void take(Index source, Index target) {
    chosen_[static_cast<std::size_t>(target)] = 1;
    match_[static_cast<std::size_t>(env_.source_entities[static_cast<std::size_t>(source)])] =
        env_.target_entities[static_cast<std::size_t>(target)];
  }

 private:
  const AlignmentEnvironment& env_;
  RlMode mode_;
  std::vector<Index> match_;  // source-KG entity -> target-KG entity
  std::vector<char> chosen_;  // per local target
};

Index sample(const VectorXd& pi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double acc = 0.0;
  for (Index a = 0; a < pi.size(); ++a) {
    acc += pi[a];
    if (u < acc) return a;
  }
  return pi.size() - 1;
}

Index argmax(const VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

A2cRun run_a2c(const AlignmentEnvironment& env, const RlConfig& cfg, const StepObserver& observer) {
  validate(cfg);
  A2cRun run;
  run.alignment = AlignmentResult::unassigned(env.n_sources());
  std::vector<Index> base_match(env.source_neighbors.size(), kNoIndex);
  for (const auto& p : env.context) base_match.at(static_cast<std::size_t>(p.source)) = p.target;
  for (const auto& p : env.confirmed) {
    run.alignment.assign(p.source, p.target, Provenance::preliminary);
    base_match.at(static_cast<std::size_t>(env.source_entities[static_cast<std::size_t>(p.source)])) =
        env.target_entities[static_cast<std::size_t>(p.target)];
  }

  std::mt19937_64 rng(cfg.rng_seed);
  const int tau = std::max(env.tau, 1);
  run.actor = init_actor(tau, cfg.actor_hidden, cfg.init_range, rng);
  run.critic = init_critic(tau, cfg.critic_hidden, cfg.init_range, rng);
  if (env.order.empty() || env.tau == 0) return run;

  // A lone residual source has no decision to coordinate with.
  if (env.order.size() == 1) {
    const Index u = env.order.front();
    run.alignment.assign(u, env.candidates[static_cast<std::size_t>(u)].front(), Provenance::rl);
    return run;
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Episode ep(env, cfg.mode, base_match);
    double total = 0.0;
    StateVector s = ep.state(env.order.front());
    for (std::size_t k = 0; k < env.order.size(); ++k) {
      const Index u = env.order[k];
      const VectorXd x = s.combined();
      const VectorXd pi = actor_forward(x, run.actor);
      const Index a = sample(pi, rng);
      const double r = reward(s, a);
      ep.take(u, env.candidates[static_cast<std::size_t>(u)][static_cast<std::size_t>(a)]);
      total += r;

      StateVector next;
      double next_value = 0.0;
      if (k + 1 < env.order.size()) {
        next = ep.state(env.order[k + 1]);
        next_value = critic_value(next.combined(), run.critic);
      }
      const double delta = r + cfg.gamma * next_value - critic_value(x, run.critic);
      const CriticParameters gv = critic_gradient(x, run.critic);
      const ActorParameters gl = actor_log_prob_gradient(x, a, run.actor);
      run.critic.w3 += cfg.critic_lr * delta * gv.w3;
      run.critic.b3 += cfg.critic_lr * delta * gv.b3;
      run.critic.w4 += cfg.critic_lr * delta * gv.w4;
      run.critic.b4 += cfg.critic_lr * delta * gv.b4;
      run.actor.w1 += cfg.actor_lr * delta * gl.w1;
      run.actor.b1 += cfg.actor_lr * delta * gl.b1;
      run.actor.w2 += cfg.actor_lr * delta * gl.w2;
      run.actor.b2 += cfg.actor_lr * delta * gl.b2;
      if (!finite(run.actor, run.critic))
        throw TrainingError(
            "actor-critic parameters became non-finite; scores far outside [0, 1] usually cause "
            "this, try a bounded distance measure",
            epoch);

      if (observer)
        observer({epoch, u, env.candidates[static_cast<std::size_t>(u)], s, a, r, delta});
      s = std::move(next);
    }
    run.episode_rewards.push_back(total);
  }

  Episode final_pass(env, cfg.mode, base_match);
  for (Index u : env.order) {
    const StateVector s = final_pass.state(u);
    const Index a = argmax(actor_forward(s.combined(), run.actor));
    const Index t = env.candidates[static_cast<std::size_t>(u)][static_cast<std::size_t>(a)];
    if (observer) observer({-1, u, env.candidates[static_cast<std::size_t>(u)], s, a, reward(s, a), 0.0});
    final_pass.take(u, t);
    run.alignment.assign(u, t, Provenance::rl);
  }
  return run;
}

AlignmentResult a2c_align(const AlignmentEnvironment& env, const RlConfig& cfg) {
  return run_a2c(env, cfg).alignment;
}

}  // namespace kgalign
