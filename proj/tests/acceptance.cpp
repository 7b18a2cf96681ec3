// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
// Criterion 9 runs only when KGALIGN_FULL_CONFIG names a pipeline config for
// the SRPRS DBP-WD data (triples, names, gold links and word vectors).

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "kgalign/eval.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kgalign;
using namespace kgalign::testing;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

// 1 -------------------------------------------------------------------------

// Absolute error below 1e-12, or within 4 ulp once the value is too large
// for a double to resolve 1e-12 (ulp(65536) is already 1.5e-11).
bool close(double got, long double exact, int& wide) {
  const double want = static_cast<double>(exact);
  const double err = std::abs(got - want);
  if (err < 1e-12) return true;
  const double ulp = std::nextafter(std::abs(want), INFINITY) - std::abs(want);
  if (ulp * 0.5 < 1e-12) return false;
  ++wide;
  return err <= 4 * ulp;
}

Outcome formula_oracles() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  int bad = 0;
  int wide = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 64);
    VectorXd u(n), v(n);
    // Half the pairs are nonnegative, like averaged ReLU outputs.
    for (Index k = 0; k < n; ++k) {
      u[k] = trial % 2 ? uni(rng) : pos(rng);
      v[k] = trial % 2 ? uni(rng) : pos(rng);
    }
    const std::vector<double> su(u.data(), u.data() + n), sv(v.data(), v.data() + n);
    const std::pair<double, long double> cases[] = {
        {bray_curtis(u, v), to_ld(bray_curtis_exact(su, sv))},
        {bray_curtis(u, v, BrayCurtisForm::textbook), to_ld(bray_curtis_textbook_exact(su, sv))},
        {manhattan(u, v), to_ld(manhattan_exact(su, sv))},
        {euclidean(u, v), euclidean_oracle(su, sv)},
        {cosine_sim(u, v), cosine_oracle(su, sv)},
    };
    for (const auto& [got, exact] : cases) {
      if (!close(got, exact, wide)) ++bad;
      if (std::abs(exact) < 1e3) worst = std::max(worst, std::abs(got - static_cast<double>(exact)));
    }
  }
  return check(bad == 0, "1000 pairs, " + std::to_string(bad) + " mismatches, max abs error " + fmt(worst, 3) +
                             " on values below 1e3, " + std::to_string(wide) + " large values checked to 4 ulp");
}

// 2 -------------------------------------------------------------------------

Outcome gradient_checks() {
  double gcn = 0.0;
  double a2c = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    gcn = std::max(gcn, gcn_gradient_check(1000 + seed).worst);
    gcn = std::max(gcn, gcn_gradient_check(2000 + seed, Activation::relu).worst);
    a2c = std::max(a2c, a2c_gradient_check(3000 + seed));
  }
  return check(gcn < 1e-4 && a2c < 1e-4,
               "40 GCN instances max rel error " + fmt(gcn, 3) + ", 20 actor-critic instances " + fmt(a2c, 3));
}

// 3 -------------------------------------------------------------------------

Outcome matching_oracles() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int blocking = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 50);
    MatrixXd m(n, n);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = uni(rng);
    const SimilarityMatrix sm(m, FeatureTag::fused);
    blocking += count_blocking_pairs(sm, stable_matching(sm));
  }
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 8);
    MatrixXd m(n, n);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = uni(rng);
    const SimilarityMatrix sm(m, FeatureTag::fused);
    const auto r = hungarian(sm);
    std::set<Index> used(r.target.begin(), r.target.end());
    if (used.size() != static_cast<std::size_t>(n) || used.contains(kNoIndex) ||
        std::abs(total_similarity(r, sm) - brute_force_assignment(m)) > 1e-9)
      ++mismatches;
  }
  return check(blocking == 0 && mismatches == 0,
               "blocking pairs " + std::to_string(blocking) + " over 200 matrices, hungarian mismatches " +
                   std::to_string(mismatches) + " over 100");
}

// 4 -------------------------------------------------------------------------

Outcome figure_one() {
  const auto m = figure_one_matrix();
  // Validate the instance with the oracles before trusting the counts.
  const auto greedy = greedy_independent(m);
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    for (Index j = 0; j < m.cols(); ++j)
      if (m.scores(i, j) > m.scores(i, best)) best = j;
    if (greedy.target[static_cast<std::size_t>(i)] != best) return check(false, "greedy disagrees with argmax");
  }
  const auto stable = stable_matching(m);
  if (count_blocking_pairs(m, stable) != 0) return check(false, "stable matching has a blocking pair");

  int good_seeds = 0;
  std::string counts;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RlConfig cfg;
    cfg.rng_seed = seed;
    cfg.preliminary_rounds = 0;
    const int correct = count_diagonal(a2c_align(figure_one_environment(cfg.tau, 0), cfg));
    counts += std::to_string(correct);
    if (correct >= 3) ++good_seeds;
  }
  const int g = count_diagonal(greedy);
  const int s = count_diagonal(stable);
  return check(g == 1 && s == 2 && good_seeds > 5,
               "greedy " + std::to_string(g) + "/4, stable " + std::to_string(s) + "/4, rl >= 3/4 on " +
                   std::to_string(good_seeds) + "/10 seeds (per seed " + counts + ")");
}

// 5 -------------------------------------------------------------------------

Outcome fusion_walkthrough_check() {
  const auto out = adaptive_fuse(fusion_walkthrough(), fusion_walkthrough_config());
  auto weight_of = [&](std::size_t feature, Index s, Index t) {
    for (const auto& c : out.correspondences[feature].items)
      if (c.corr.source == s && c.corr.target == t) return c.weight;
    return -1.0;
  };
  const double shared = weight_of(0, 0, 0);       // two features, both below theta1
  const double overridden = weight_of(1, 1, 1);   // semantic copy scores 0.96 > 0.95
  const double unique = weight_of(1, 2, 2);
  double sum = 0.0;
  for (double w : out.weights.weights) sum += w;
  const bool ok = shared == 0.5 && weight_of(2, 0, 0) == 0.5 && overridden == 0.48 &&
                  weight_of(0, 1, 1) == 0.5 && unique == 1.0 && std::abs(sum - 1.0) < 1e-9;
  return check(ok, "shared " + fmt(shared) + ", overridden " + fmt(overridden) + ", unique " + fmt(unique) +
                       ", weights sum " + fmt(sum, 17));
}

// 6 and 7 -------------------------------------------------------------------

struct PlantedRuns {
  bool ok = false;
  std::string error;
  EvalReport greedy, stable, rl;
  MatrixXd fused;
  IndexPairs gold_local;
};

PlantedRuns planted_runs(const fs::path& dir) {
  PlantedRuns out;
  try {
    SyntheticConfig sc;
    sc.n = 200;
    sc.name_noise = 0.3;
    sc.rng_seed = 7;
    save_synthetic(gen_synthetic(sc), dir);

    PipelineConfig cfg;
    cfg.kg1_triples = dir / "kg1_triples.tsv";
    cfg.kg1_names = dir / "kg1_names.tsv";
    cfg.kg2_triples = dir / "kg2_triples.tsv";
    cfg.kg2_names = dir / "kg2_names.tsv";
    cfg.alignment = dir / "alignment.tsv";
    cfg.vectors = dir / "vectors.vec";
    cfg.output_dir = dir / "out";
    cfg.measure = parse_measure("bc-textbook");
    cfg.seed = 7;

    cfg.strategy = Strategy::greedy;
    out.greedy = *run_pipeline(cfg).report;
    cfg.strategy = Strategy::stable;
    out.stable = *run_pipeline(cfg, Stage::eval, true).report;
    cfg.strategy = Strategy::rl;
    out.rl = *run_pipeline(cfg, Stage::eval, true).report;
    out.fused = load_matrix(cfg.output_dir / "fused.bin");

    // Test pairs in local coordinates, rebuilt from the inputs.
    const auto kg1 = load_kg(cfg.kg1_triples, cfg.kg1_names);
    const auto kg2 = load_kg(cfg.kg2_triples, cfg.kg2_names);
    const auto gold = index_alignment(load_alignment(cfg.alignment), kg1, kg2);
    const auto split = split_alignment(gold, cfg.train_frac, cfg.val_frac, cfg.seed);
    std::vector<Index> rows, cols;
    for (const auto& p : split.test) {
      rows.push_back(p.source);
      cols.push_back(p.target);
    }
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    for (const auto& p : split.test)
      out.gold_local.push_back({std::lower_bound(rows.begin(), rows.end(), p.source) - rows.begin(),
                                std::lower_bound(cols.begin(), cols.end(), p.target) - cols.begin()});
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

Outcome planted_benchmark(const PlantedRuns& runs) {
  if (!runs.ok) return check(false, "pipeline failed: " + runs.error);
  const auto& g = runs.greedy;
  const auto& r = runs.rl;
  const auto& s = runs.stable;
  const bool ok = r.prf.precision >= g.prf.precision && r.multiplicities.multe < g.multiplicities.multe &&
                  r.multiplicities.multe >= 0 && s.multiplicities.mulse == 0 && s.multiplicities.multe == 0;
  return check(ok, "precision rl " + fmt(r.prf.precision) + " vs greedy " + fmt(g.prf.precision) + ", MulTE rl " +
                       std::to_string(r.multiplicities.multe) + " vs greedy " +
                       std::to_string(g.multiplicities.multe) + ", stable MulSE/MulTE " +
                       std::to_string(s.multiplicities.mulse) + "/" + std::to_string(s.multiplicities.multe));
}

Outcome preliminary_treatment(const PlantedRuns& runs) {
  if (!runs.ok) return check(false, "pipeline failed: " + runs.error);
  const SimilarityMatrix fused(runs.fused, FeatureTag::fused);
  const auto pre = preliminary_filter(fused, 2);
  auto got = pre.confirmed;
  auto expected = mutual_argmax_oracle(runs.fused, 2);
  std::sort(got.begin(), got.end());
  std::sort(expected.begin(), expected.end());
  const auto poc = fraction_correct(pre.confirmed, runs.gold_local);
  const double greedy = runs.greedy.prf.precision;
  const bool ok = got == expected && poc && *poc > greedy && runs.rl.preliminary_poc == poc;
  return check(ok, std::to_string(pre.confirmed.size()) + " pairs confirmed, PoC " + (poc ? fmt(*poc) : "n/a") +
                       " vs greedy precision " + fmt(greedy) + ", oracle " + (got == expected ? "agrees" : "differs"));
}

// 8 -------------------------------------------------------------------------

Outcome metric_identities() {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> level(0, 20);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 100);
    MatrixXd m(n, n);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = level(rng) / 20.0;
    const SimilarityMatrix sm(m, FeatureTag::fused);
    IndexPairs gold;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i) gold.push_back({i, perm[static_cast<std::size_t>(i)]});

    const auto pred = to_pairs(greedy_independent(sm));  // rank-1 entries, one per source
    const auto s = prf(pred, gold);
    if (!(s.precision == s.recall && s.recall == s.f1)) ++violations;
    const auto h = hits_mrr(rank_targets(sm), gold, {1});
    if (h.hits.at(1) != s.precision) ++violations;
  }
  return check(violations == 0, "100 prediction sets, violations " + std::to_string(violations));
}

// 9 -------------------------------------------------------------------------

Outcome full_scale() {
  const char* path = std::getenv("KGALIGN_FULL_CONFIG");
  if (!path || !*path) return {Verdict::skip, "set KGALIGN_FULL_CONFIG to an SRPRS DBP-WD pipeline config"};
  try {
    auto cfg = load_pipeline_config(path);
    const auto full = run_pipeline(cfg);
    std::ostringstream table;
    table << std::fixed << std::setprecision(3) << "P/R/F1 " << full.report->prf.precision << '/'
          << full.report->prf.recall << '/' << full.report->prf.f1;

    cfg.features = {FeatureTag::string};
    cfg.strategy = Strategy::greedy;
    cfg.output_dir /= "lev_only";
    const auto lev = run_pipeline(cfg);
    std::ostringstream p;
    p << std::fixed << std::setprecision(3) << lev.report->prf.precision;
    return check(p.str() == "1.000", table.str() + ", string-only greedy precision " + p.str());
  } catch (const std::exception& e) {
    return check(false, e.what());
  }
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = body();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::skip ? "SKIP" : "FAIL";
    if (o.verdict == Verdict::fail) ++failures;
    std::cout << tag << ' ' << id << ' ' << name << ": " << o.detail << " [" << std::fixed << std::setprecision(2)
              << secs << " s]" << std::defaultfloat << std::endl;
  };

  report(1, "distance formulas", formula_oracles);
  report(2, "gradient checks", gradient_checks);
  report(3, "matching oracles", matching_oracles);
  report(4, "four-entity example", figure_one);
  report(5, "fusion weights", fusion_walkthrough_check);

  TempDir dir("acceptance");
  PlantedRuns runs;
  report(6, "planted benchmark", [&] {
    runs = planted_runs(dir.path());
    return planted_benchmark(runs);
  });
  report(7, "preliminary treatment", [&] { return preliminary_treatment(runs); });
  report(8, "metric identities", metric_identities);
  report(9, "full-scale harness", full_scale);
  return failures == 0 ? 0 : 1;
}
