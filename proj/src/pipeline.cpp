#include "kgalign/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "kgalign/name_features.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy:
      return "greedy";
    case Strategy::stable:
      return "stable";
    case Strategy::hungarian:
      return "hungarian";
    case Strategy::rl:
      return "rl";
  }
  return "rl";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::greedy, Strategy::stable, Strategy::hungarian, Strategy::rl})
    if (to_string(s) == name) return s;
  throw ArgumentError("unknown strategy '" + name + "' (greedy, stable, hungarian, rl)");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::embed:
      return "embed";
    case Stage::features:
      return "features";
    case Stage::fuse:
      return "fuse";
    case Stage::align:
      return "align";
    case Stage::eval:
      return "eval";
  }
  return "eval";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  throw ArgumentError("unknown activation '" + s + "'");
}

std::string order_name(OverrideOrder o) {
  return o == OverrideOrder::divide_then_override ? "divide_then_override"
                                                  : "override_then_divide";
}

OverrideOrder parse_order(const std::string& s) {
  if (s == "divide_then_override") return OverrideOrder::divide_then_override;
  if (s == "override_then_divide") return OverrideOrder::override_then_divide;
  throw ArgumentError("unknown override order '" + s + "'");
}

std::string format_name(MatrixFormat f) { return f == MatrixFormat::tsv ? "tsv" : "bin"; }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    if (!ok) throw ArgumentError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void get_path(const json& j, const char* key, fs::path& out, const fs::path& base) {
  if (!j.contains(key)) return;
  fs::path p = j.at(key).get<std::string>();
  out = (p.is_relative() && !base.empty()) ? base / p : p;
}

void get_seed(const json& j, const char* key, std::optional<std::uint64_t>& out) {
  if (j.contains(key)) out = j.at(key).get<std::uint64_t>();
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, const fs::path& base_dir) {
  PipelineConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("invalid pipeline config: ") + e.what());
  }
  try {
    check_keys(j,
               {"kg1_triples", "kg1_names", "kg2_triples", "kg2_names", "alignment", "train",
                "test", "vectors", "split", "features", "embed", "measure", "fusion", "rl",
                "strategy", "output_dir", "format", "seed"},
               "");
    get_path(j, "kg1_triples", cfg.kg1_triples, base_dir);
    get_path(j, "kg1_names", cfg.kg1_names, base_dir);
    get_path(j, "kg2_triples", cfg.kg2_triples, base_dir);
    get_path(j, "kg2_names", cfg.kg2_names, base_dir);
    get_path(j, "alignment", cfg.alignment, base_dir);
    get_path(j, "train", cfg.train, base_dir);
    get_path(j, "test", cfg.test, base_dir);
    get_path(j, "vectors", cfg.vectors, base_dir);
    get_path(j, "output_dir", cfg.output_dir, base_dir);
    get(j, "seed", cfg.seed);
    if (j.contains("split")) {
      const auto& s = j["split"];
      check_keys(s, {"train", "val", "seed"}, "split.");
      get(s, "train", cfg.train_frac);
      get(s, "val", cfg.val_frac);
      get_seed(s, "seed", cfg.split_seed);
    }
    if (j.contains("features")) {
      cfg.features.clear();
      for (const auto& f : j["features"]) cfg.features.push_back(parse_feature_tag(f.get<std::string>()));
    }
    if (j.contains("embed")) {
      const auto& e = j["embed"];
      check_keys(e,
                 {"dim", "margin", "epochs", "negatives", "learning_rate", "output_activation",
                  "resample_negatives", "train_features", "seed"},
                 "embed.");
      get(e, "dim", cfg.embed.dim);
      get(e, "margin", cfg.embed.margin);
      get(e, "epochs", cfg.embed.epochs);
      get(e, "negatives", cfg.embed.negatives_per_positive);
      get(e, "learning_rate", cfg.embed.learning_rate);
      get(e, "resample_negatives", cfg.embed.resample_negatives);
      get(e, "train_features", cfg.embed.train_features);
      if (e.contains("output_activation"))
        cfg.embed.output_activation = parse_activation(e["output_activation"].get<std::string>());
      get_seed(e, "seed", cfg.embed_seed);
    }
    if (j.contains("measure")) cfg.measure = parse_measure(j["measure"].get<std::string>());
    if (j.contains("fusion")) {
      const auto& f = j["fusion"];
      check_keys(f, {"theta1", "theta2", "override_order"}, "fusion.");
      get(f, "theta1", cfg.fusion.theta1);
      get(f, "theta2", cfg.fusion.theta2);
      if (f.contains("override_order"))
        cfg.fusion.order = parse_order(f["override_order"].get<std::string>());
    }
    if (j.contains("rl")) {
      const auto& r = j["rl"];
      check_keys(r,
                 {"gamma", "actor_lr", "critic_lr", "tau", "actor_hidden", "critic_hidden",
                  "epochs", "preliminary_rounds", "mode", "init_range", "seed"},
                 "rl.");
      get(r, "gamma", cfg.rl.gamma);
      get(r, "actor_lr", cfg.rl.actor_lr);
      get(r, "critic_lr", cfg.rl.critic_lr);
      get(r, "tau", cfg.rl.tau);
      get(r, "actor_hidden", cfg.rl.actor_hidden);
      get(r, "critic_hidden", cfg.rl.critic_hidden);
      get(r, "epochs", cfg.rl.epochs);
      get(r, "preliminary_rounds", cfg.rl.preliminary_rounds);
      get(r, "init_range", cfg.rl.init_range);
      if (r.contains("mode")) cfg.rl.mode = parse_rl_mode(r["mode"].get<std::string>());
      get_seed(r, "seed", cfg.rl_seed);
    }
    if (j.contains("strategy")) cfg.strategy = parse_strategy(j["strategy"].get<std::string>());
    if (j.contains("format")) cfg.format = parse_matrix_format(j["format"].get<std::string>());
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("invalid pipeline config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), path.parent_path());
}

namespace {

json config_to_json(const PipelineConfig& cfg) {
  json j;
  auto put_path = [&](const char* key, const fs::path& p) {
    if (!p.empty()) j[key] = p.generic_string();
  };
  put_path("kg1_triples", cfg.kg1_triples);
  put_path("kg1_names", cfg.kg1_names);
  put_path("kg2_triples", cfg.kg2_triples);
  put_path("kg2_names", cfg.kg2_names);
  put_path("alignment", cfg.alignment);
  put_path("train", cfg.train);
  put_path("test", cfg.test);
  put_path("vectors", cfg.vectors);
  j["split"] = {{"train", cfg.train_frac}, {"val", cfg.val_frac}};
  if (cfg.split_seed) j["split"]["seed"] = *cfg.split_seed;
  j["features"] = json::array();
  for (auto f : cfg.features) j["features"].push_back(to_string(f));
  j["embed"] = {{"dim", cfg.embed.dim},
                {"margin", cfg.embed.margin},
                {"epochs", cfg.embed.epochs},
                {"negatives", cfg.embed.negatives_per_positive},
                {"learning_rate", cfg.embed.learning_rate},
                {"output_activation", activation_name(cfg.embed.output_activation)},
                {"resample_negatives", cfg.embed.resample_negatives},
                {"train_features", cfg.embed.train_features}};
  if (cfg.embed_seed) j["embed"]["seed"] = *cfg.embed_seed;
  j["measure"] = to_string(cfg.measure);
  j["fusion"] = {{"theta1", cfg.fusion.theta1},
                 {"theta2", cfg.fusion.theta2},
                 {"override_order", order_name(cfg.fusion.order)}};
  j["rl"] = {{"gamma", cfg.rl.gamma},
             {"actor_lr", cfg.rl.actor_lr},
             {"critic_lr", cfg.rl.critic_lr},
             {"tau", cfg.rl.tau},
             {"actor_hidden", cfg.rl.actor_hidden},
             {"critic_hidden", cfg.rl.critic_hidden},
             {"epochs", cfg.rl.epochs},
             {"preliminary_rounds", cfg.rl.preliminary_rounds},
             {"mode", to_string(cfg.rl.mode)},
             {"init_range", cfg.rl.init_range}};
  if (cfg.rl_seed) j["rl"]["seed"] = *cfg.rl_seed;
  j["strategy"] = to_string(cfg.strategy);
  j["output_dir"] = cfg.output_dir.generic_string();
  j["format"] = format_name(cfg.format);
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& cfg) { return config_to_json(cfg).dump(2); }

void validate(const PipelineConfig& cfg) {
  auto require = [](const fs::path& p, const char* what) {
    if (p.empty()) throw ArgumentError(std::string("missing ") + what + " path");
    if (!fs::is_regular_file(p)) throw ArgumentError(std::string(what) + " not found: " + p.string());
  };
  require(cfg.kg1_triples, "kg1_triples");
  require(cfg.kg1_names, "kg1_names");
  require(cfg.kg2_triples, "kg2_triples");
  require(cfg.kg2_names, "kg2_names");
  if (cfg.train.empty() != cfg.test.empty())
    throw ArgumentError("train and test split files must be given together");
  if (cfg.train.empty()) {
    require(cfg.alignment, "alignment");
  } else {
    require(cfg.train, "train");
    require(cfg.test, "test");
  }
  if (cfg.features.empty()) throw ArgumentError("at least one feature is required");
  for (auto f : cfg.features) {
    if (f == FeatureTag::fused) throw ArgumentError("'fused' is not an input feature");
    if (std::count(cfg.features.begin(), cfg.features.end(), f) > 1)
      throw ArgumentError("feature '" + to_string(f) + "' listed twice");
  }
  const bool semantic =
      std::find(cfg.features.begin(), cfg.features.end(), FeatureTag::semantic) != cfg.features.end();
  if (semantic) require(cfg.vectors, "vectors");
  validate(cfg.embed);
  validate(cfg.fusion);
  validate(cfg.rl);
  if (cfg.output_dir.empty()) throw ArgumentError("missing output directory");
}

// ---------------------------------------------------------------------------
// Result files

void write_alignment_result(const AlignmentResult& r, const std::vector<std::string>& source_ids,
                            const std::vector<std::string>& target_ids, std::ostream& out) {
  for (Index i = 0; i < r.size(); ++i) {
    const Index t = r.target[static_cast<std::size_t>(i)];
    if (t == kNoIndex) continue;
    out << source_ids.at(static_cast<std::size_t>(i)) << '\t'
        << target_ids.at(static_cast<std::size_t>(t)) << '\t'
        << to_string(r.provenance[static_cast<std::size_t>(i)]) << '\n';
  }
}

std::vector<AlignmentRecord> read_alignment_result(std::istream& in, const std::string& label) {
  std::vector<AlignmentRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 && cols.size() != 3)
      throw ParseError(label, line_no, "expected source_id<TAB>target_id[<TAB>provenance]");
    AlignmentRecord rec{std::string(cols[0]), std::string(cols[1]), Provenance::none};
    if (cols.size() == 3) {
      try {
        rec.provenance = parse_provenance(std::string(cols[2]));
      } catch (const ArgumentError& e) {
        throw ParseError(label, line_no, e.what());
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_ranked(const std::vector<std::vector<Index>>& ranked,
                  const std::vector<std::string>& source_ids,
                  const std::vector<std::string>& target_ids, std::ostream& out) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out << source_ids.at(i);
    for (Index t : ranked[i]) out << '\t' << target_ids.at(static_cast<std::size_t>(t));
    out << '\n';
  }
}

std::unordered_map<std::string, std::vector<std::string>> read_ranked(std::istream& in,
                                                                      const std::string& label) {
  std::unordered_map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto cols = split_tabs(line);
    std::vector<std::string> targets(cols.begin() + 1, cols.end());
    if (!out.emplace(std::string(cols[0]), std::move(targets)).second)
      throw ParseError(label, line_no, "duplicate source '" + std::string(cols[0]) + "'");
  }
  return out;
}

EvalReport evaluate_files(const fs::path& pred, const fs::path& gold,
                          const std::optional<fs::path>& ranked, const std::vector<int>& ks) {
  std::ifstream pin(pred);
  if (!pin) throw EvaluationError("cannot open predictions " + pred.string());
  const auto records = read_alignment_result(pin, pred.string());
  const auto gold_pairs = load_alignment(gold);

  EvalReport report;
  std::vector<IdPair> predicted;
  IndexPairs confirmed_local;
  std::unordered_map<std::string, Index> target_use;
  for (const auto& r : records) {
    predicted.emplace_back(r.source, r.target);
    ++target_use[r.target];
  }
  report.prf = prf(predicted, gold_pairs);
  for (const auto& [t, n] : target_use) {
    if (n > 1) {
      ++report.multiplicities.multe;
      report.multiplicities.mulse += n;
    }
  }
  // Fraction of preliminary-confirmed predictions that are gold.
  const std::set<IdPair> gold_set(gold_pairs.begin(), gold_pairs.end());
  std::size_t confirmed = 0;
  std::size_t confirmed_correct = 0;
  for (const auto& r : records) {
    if (r.provenance != Provenance::preliminary) continue;
    ++confirmed;
    if (gold_set.contains({r.source, r.target})) ++confirmed_correct;
  }
  if (confirmed > 0)
    report.preliminary_poc = static_cast<double>(confirmed_correct) / static_cast<double>(confirmed);

  if (ranked) {
    std::ifstream rin(*ranked);
    if (!rin) throw EvaluationError("cannot open ranked lists " + ranked->string());
    report.ranking = hits_mrr(read_ranked(rin, ranked->string()), gold_pairs, ks);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

struct Data {
  KnowledgeGraph kg1;
  KnowledgeGraph kg2;
  IndexPairs train;
  IndexPairs test;
  std::vector<Index> sources;  // local row -> kg1 entity, ascending
  std::vector<Index> targets;  // local col -> kg2 entity, ascending
  IndexPairs gold_local;
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
};

json file_signature(const fs::path& p) {
  if (p.empty()) return nullptr;
  return {{"path", fs::absolute(p).lexically_normal().generic_string()},
          {"size", fs::file_size(p)},
          {"mtime", fs::last_write_time(p).time_since_epoch().count()}};
}

Data load_data(const PipelineConfig& cfg, std::uint64_t split_seed) {
  Data d;
  d.kg1 = load_kg(cfg.kg1_triples, cfg.kg1_names);
  d.kg2 = load_kg(cfg.kg2_triples, cfg.kg2_names);
  if (!cfg.train.empty()) {
    d.train = index_alignment(load_alignment(cfg.train), d.kg1, d.kg2);
    d.test = index_alignment(load_alignment(cfg.test), d.kg1, d.kg2);
  } else {
    const auto gold = index_alignment(load_alignment(cfg.alignment), d.kg1, d.kg2);
    auto split = split_alignment(gold, cfg.train_frac, cfg.val_frac, split_seed);
    d.train = std::move(split.train);
    d.test = std::move(split.test);
  }
  if (d.test.empty()) throw ArgumentError("empty test split");
  for (const auto& p : d.test) {
    d.sources.push_back(p.source);
    d.targets.push_back(p.target);
  }
  std::sort(d.sources.begin(), d.sources.end());
  std::sort(d.targets.begin(), d.targets.end());
  auto local = [](const std::vector<Index>& v, Index e) {
    return static_cast<Index>(std::lower_bound(v.begin(), v.end(), e) - v.begin());
  };
  for (const auto& p : d.test) d.gold_local.push_back({local(d.sources, p.source), local(d.targets, p.target)});
  for (Index e : d.sources) d.source_ids.push_back(d.kg1.entities().id(e));
  for (Index e : d.targets) d.target_ids.push_back(d.kg2.entities().id(e));
  return d;
}

std::vector<std::string> gather_names(const KnowledgeGraph& kg, const std::vector<Index>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (Index e : idx) out.push_back(kg.name(e));
  return out;
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, bool resume, std::ostream* log)
      : cfg_(cfg), resume_(resume), log_(log) {}

  PipelineOutcome run(Stage last);

 private:
  fs::path artifact(const std::string& name) const {
    return cfg_.output_dir / (name + (cfg_.format == MatrixFormat::tsv ? ".tsv" : ".bin"));
  }
  fs::path stamp_path(Stage s) const { return cfg_.output_dir / (to_string(s) + ".stamp"); }

  /// True when resuming and the stored stamp equals `stamp` and every
  /// artifact exists.
  bool cached(Stage s, const std::string& stamp, const std::vector<fs::path>& artifacts) const {
    if (!resume_) return false;
    std::ifstream in(stamp_path(s));
    if (!in) return false;
    std::stringstream ss;
    ss << in.rdbuf();
    if (ss.str() != stamp) return false;
    return std::all_of(artifacts.begin(), artifacts.end(),
                       [](const fs::path& p) { return fs::exists(p); });
  }

  void write_stamp(Stage s, const std::string& stamp) const {
    std::ofstream out(stamp_path(s));
    out << stamp;
    if (!out) throw Error("cannot write " + stamp_path(s).string());
  }

  void note(Stage s, bool reused) {
    (reused ? outcome_.reused : outcome_.computed).push_back(s);
    if (log_) *log_ << "[" << to_string(s) << "] " << (reused ? "reused cached artifacts" : "done") << '\n';
  }

  bool uses(FeatureTag f) const {
    return std::find(cfg_.features.begin(), cfg_.features.end(), f) != cfg_.features.end();
  }

  std::string embed_stage();
  std::string features_stage(const std::string& upstream);
  std::string fuse_stage(const std::string& upstream);
  std::string align_stage(const std::string& upstream);
  void eval_stage();

  const PipelineConfig& cfg_;
  bool resume_;
  std::ostream* log_;
  Data data_;
  json inputs_;
  EmbeddingMatrix z1_, z2_;
  std::vector<SimilarityMatrix> features_;
  FusionOutcome fusion_;
  AlignmentResult alignment_;
  PipelineOutcome outcome_;
};

std::string Runner::embed_stage() {
  json stamp = {{"stage", "embed"}, {"inputs", inputs_}};
  if (!uses(FeatureTag::structural)) return stamp.dump();
  stamp["embed"] = config_to_json(cfg_)["embed"];
  stamp["embed_seed"] = cfg_.embed_seed.value_or(cfg_.seed);
  stamp["format"] = format_name(cfg_.format);
  const std::string s = stamp.dump();
  const auto p1 = artifact("embed_kg1");
  const auto p2 = artifact("embed_kg2");
  if (cached(Stage::embed, s, {p1, p2})) {
    z1_ = load_matrix(p1);
    z2_ = load_matrix(p2);
    note(Stage::embed, true);
    return s;
  }
  TrainConfig tc = cfg_.embed;
  tc.rng_seed = cfg_.embed_seed.value_or(cfg_.seed);
  auto result = train(data_.kg1, data_.kg2, data_.train, tc);
  z1_ = std::move(result.z1);
  z2_ = std::move(result.z2);
  if (log_ && !result.loss_history.empty())
    *log_ << "[embed] loss " << result.loss_history.front() << " -> " << result.loss_history.back()
          << '\n';
  save_matrix(z1_, p1, cfg_.format);
  save_matrix(z2_, p2, cfg_.format);
  write_stamp(Stage::embed, s);
  note(Stage::embed, false);
  return s;
}

std::string Runner::features_stage(const std::string& upstream) {
  json stamp = {{"stage", "features"},
                {"upstream", upstream},
                {"features", config_to_json(cfg_)["features"]},
                {"measure", to_string(cfg_.measure)},
                {"vectors", file_signature(cfg_.vectors)},
                {"format", format_name(cfg_.format)}};
  const std::string s = stamp.dump();
  std::vector<fs::path> paths;
  for (auto f : cfg_.features) paths.push_back(artifact("sim_" + to_string(f)));
  if (cached(Stage::features, s, paths)) {
    for (std::size_t k = 0; k < paths.size(); ++k)
      features_.emplace_back(load_matrix(paths[k]), cfg_.features[k]);
    note(Stage::features, true);
    return s;
  }
  DistanceDiagnostics diag;
  for (auto f : cfg_.features) {
    switch (f) {
      case FeatureTag::structural:
        features_.push_back(sim_matrix(gather_rows(z1_, data_.sources), gather_rows(z2_, data_.targets),
                                       cfg_.measure, FeatureTag::structural, &diag));
        break;
      case FeatureTag::semantic: {
        const auto table = load_word_vectors(cfg_.vectors);
        const auto n1 = name_embeddings(gather_names(data_.kg1, data_.sources), table);
        const auto n2 = name_embeddings(gather_names(data_.kg2, data_.targets), table);
        if (log_) {
          const auto oov1 = std::count(n1.oov_mask.begin(), n1.oov_mask.end(), true);
          const auto oov2 = std::count(n2.oov_mask.begin(), n2.oov_mask.end(), true);
          *log_ << "[features] names without known tokens: " << oov1 << " source, " << oov2
                << " target\n";
        }
        features_.push_back(sim_matrix(n1.rows, n2.rows, cfg_.measure, FeatureTag::semantic, &diag));
        break;
      }
      case FeatureTag::string:
        features_.push_back(string_sim_matrix(gather_names(data_.kg1, data_.sources),
                                              gather_names(data_.kg2, data_.targets)));
        break;
      case FeatureTag::fused:
        throw ArgumentError("'fused' is not an input feature");
    }
  }
  if (log_ && diag.zero_denominator_events > 0)
    *log_ << "[features] zero-denominator coordinates: " << diag.zero_denominator_events << '\n';
  for (std::size_t k = 0; k < paths.size(); ++k) save_matrix(features_[k].scores, paths[k], cfg_.format);
  write_stamp(Stage::features, s);
  note(Stage::features, false);
  return s;
}

std::string Runner::fuse_stage(const std::string& upstream) {
  json stamp = {{"stage", "fuse"}, {"upstream", upstream}, {"fusion", config_to_json(cfg_)["fusion"]}};
  const std::string s = stamp.dump();
  const auto fused_path = artifact("fused");
  const auto report_path = cfg_.output_dir / "fusion_report.txt";
  if (cached(Stage::fuse, s, {fused_path, report_path})) {
    // Correspondences are cheap to rebuild and feed the eval diagnostics.
    std::vector<FeatureCorrespondences> per_feature;
    for (const auto& m : features_) per_feature.push_back({m.tag, confident_correspondences(m)});
    fusion_.correspondences = correspondence_weights(per_feature, cfg_.fusion);
    fusion_.fused = SimilarityMatrix(load_matrix(fused_path), FeatureTag::fused);
    note(Stage::fuse, true);
    return s;
  }
  fusion_ = adaptive_fuse(features_, cfg_.fusion);
  if (log_) {
    for (std::size_t k = 0; k < fusion_.weights.features.size(); ++k)
      *log_ << "[fuse] weight." << to_string(fusion_.weights.features[k]) << " = "
            << fusion_.weights.weights[k] << '\n';
  }
  save_matrix(fusion_.fused.scores, fused_path, cfg_.format);
  std::ofstream report(report_path);
  write_fusion_report(fusion_, cfg_.fusion, report);
  report.close();
  write_stamp(Stage::fuse, s);
  note(Stage::fuse, false);
  return s;
}

std::string Runner::align_stage(const std::string& upstream) {
  json stamp = {{"stage", "align"}, {"upstream", upstream}, {"strategy", to_string(cfg_.strategy)}};
  if (cfg_.strategy == Strategy::rl) {
    stamp["rl"] = config_to_json(cfg_)["rl"];
    stamp["rl_seed"] = cfg_.rl_seed.value_or(cfg_.seed);
  }
  const std::string s = stamp.dump();
  const auto result_path = cfg_.output_dir / "alignment.tsv";
  const auto ranked_path = cfg_.output_dir / "ranked.tsv";
  if (cached(Stage::align, s, {result_path, ranked_path})) {
    std::ifstream in(result_path);
    const auto records = read_alignment_result(in, result_path.string());
    std::unordered_map<std::string, Index> src, tgt;
    for (std::size_t i = 0; i < data_.source_ids.size(); ++i) src[data_.source_ids[i]] = static_cast<Index>(i);
    for (std::size_t j = 0; j < data_.target_ids.size(); ++j) tgt[data_.target_ids[j]] = static_cast<Index>(j);
    alignment_ = AlignmentResult::unassigned(static_cast<Index>(data_.sources.size()));
    for (const auto& r : records) alignment_.assign(src.at(r.source), tgt.at(r.target), r.provenance);
    note(Stage::align, true);
    return s;
  }
  const auto& m = fusion_.fused;
  switch (cfg_.strategy) {
    case Strategy::greedy:
      alignment_ = greedy_independent(m);
      break;
    case Strategy::stable:
      alignment_ = stable_matching(m);
      break;
    case Strategy::hungarian:
      alignment_ = hungarian(m);
      break;
    case Strategy::rl: {
      RlConfig rc = cfg_.rl;
      rc.rng_seed = cfg_.rl_seed.value_or(cfg_.seed);
      const auto env = make_environment(m, data_.sources, data_.targets, data_.kg1, data_.kg2,
                                        rc.tau, rc.preliminary_rounds, data_.train);
      if (log_)
        *log_ << "[align] preliminary treatment confirmed " << env.confirmed.size() << " of "
              << env.n_sources() << " sources\n";
      alignment_ = a2c_align(env, rc);
      break;
    }
  }
  std::ofstream out(result_path);
  write_alignment_result(alignment_, data_.source_ids, data_.target_ids, out);
  out.close();
  std::ofstream ranked(ranked_path);
  write_ranked(rank_targets(m), data_.source_ids, data_.target_ids, ranked);
  ranked.close();
  if (!out || !ranked) throw Error("cannot write alignment results to " + cfg_.output_dir.string());
  write_stamp(Stage::align, s);
  note(Stage::align, false);
  return s;
}

void Runner::eval_stage() {
  EvalReport report;
  report.prf = prf(to_pairs(alignment_), data_.gold_local);
  report.ranking = hits_mrr(rank_targets(fusion_.fused), data_.gold_local, {1, 10});
  report.multiplicities = count_multiplicities(alignment_);
  report.poc = fusion_poc(fusion_.correspondences, data_.gold_local);
  IndexPairs confirmed;
  for (Index i = 0; i < alignment_.size(); ++i)
    if (alignment_.provenance[static_cast<std::size_t>(i)] == Provenance::preliminary)
      confirmed.push_back({i, alignment_.target[static_cast<std::size_t>(i)]});
  report.preliminary_poc = fraction_correct(confirmed, data_.gold_local);
  report.labels["strategy"] = to_string(cfg_.strategy);
  report.labels["measure"] = to_string(cfg_.measure);
  if (cfg_.strategy == Strategy::rl) report.labels["mode"] = to_string(cfg_.rl.mode);
  report.labels["test_pairs"] = std::to_string(data_.gold_local.size());

  std::ofstream txt(cfg_.output_dir / "report.txt");
  write_report_text(report, txt);
  std::ofstream js(cfg_.output_dir / "report.json");
  write_report_json(report, js);
  if (!txt || !js) throw Error("cannot write reports to " + cfg_.output_dir.string());
  if (log_)
    *log_ << "[eval] precision " << report.prf.precision << " recall " << report.prf.recall
          << " f1 " << report.prf.f1 << '\n';
  outcome_.report = std::move(report);
  note(Stage::eval, false);
}

PipelineOutcome Runner::run(Stage last) {
  validate(cfg_);
  fs::create_directories(cfg_.output_dir);
  const std::uint64_t split_seed = cfg_.split_seed.value_or(cfg_.seed);
  try {
    data_ = load_data(cfg_, split_seed);
  } catch (const Error& e) {
    throw StageError(Stage::embed, std::string("loading data: ") + e.what());
  }
  inputs_ = {{"kg1_triples", file_signature(cfg_.kg1_triples)},
             {"kg1_names", file_signature(cfg_.kg1_names)},
             {"kg2_triples", file_signature(cfg_.kg2_triples)},
             {"kg2_names", file_signature(cfg_.kg2_names)},
             {"alignment", file_signature(cfg_.alignment)},
             {"train", file_signature(cfg_.train)},
             {"test", file_signature(cfg_.test)},
             {"split", {{"train", cfg_.train_frac}, {"val", cfg_.val_frac}, {"seed", split_seed}}}};

  auto guarded = [](Stage s, auto&& body) {
    try {
      return body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(s, e.what());
    }
  };
  std::string stamp = guarded(Stage::embed, [&] { return embed_stage(); });
  if (last == Stage::embed) return outcome_;
  stamp = guarded(Stage::features, [&] { return features_stage(stamp); });
  if (last == Stage::features) return outcome_;
  stamp = guarded(Stage::fuse, [&] { return fuse_stage(stamp); });
  if (last == Stage::fuse) return outcome_;
  stamp = guarded(Stage::align, [&] { return align_stage(stamp); });
  outcome_.alignment = alignment_;
  if (last == Stage::align) return outcome_;
  guarded(Stage::eval, [&] {
    eval_stage();
    return 0;
  });
  return outcome_;
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& cfg, Stage last, bool resume, std::ostream* log) {
  return Runner(cfg, resume, log).run(last);
}

}  // namespace kgalign
