// End-to-end pipeline: structural embedding, feature matrices, adaptive
// fusion, collective decoding and evaluation. Every stage writes its artifacts
// to the output directory next to a stamp holding a fingerprint of the
// configuration it depends on; `resume` reloads artifacts whose stamp matches.
#ifndef KGALIGN_PIPELINE_HPP_
#define KGALIGN_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/collective.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/matrix_io.hpp"
#include "kgalign/simmat.hpp"
#include "kgalign/struct_embed.hpp"

namespace kgalign {

enum class Strategy { greedy, stable, hungarian, rl };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

enum class Stage { embed, features, fuse, align, eval };

std::string to_string(Stage s);

/// A stage failed; what() starts with the stage name.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& cause)
      : Error(to_string(stage) + ": " + cause), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct PipelineConfig {
  std::filesystem::path kg1_triples;
  std::filesystem::path kg1_names;
  std::filesystem::path kg2_triples;
  std::filesystem::path kg2_names;
  std::filesystem::path alignment;  // all gold pairs
  std::filesystem::path train;      // optional explicit split; test required with it
  std::filesystem::path test;
  std::filesystem::path vectors;    // optional; without it no semantic feature
  double train_frac = 0.24;
  double val_frac = 0.06;

  std::vector<FeatureTag> features = {FeatureTag::structural, FeatureTag::semantic,
                                      FeatureTag::string};
  TrainConfig embed;
  DistanceMeasure measure;
  FusionConfig fusion;
  RlConfig rl;
  Strategy strategy = Strategy::rl;
  std::filesystem::path output_dir = "kgalign_out";
  MatrixFormat format = MatrixFormat::binary;

  std::uint64_t seed = 0;
  /// Per-stage seeds; unset ones take `seed`.
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> embed_seed;
  std::optional<std::uint64_t> rl_seed;
};

/// Reads a JSON config. Relative paths resolve against the file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir = {});
std::string pipeline_config_json(const PipelineConfig& cfg);

/// Checks parameters and that every referenced input file exists.
void validate(const PipelineConfig& cfg);

struct PipelineOutcome {
  std::optional<EvalReport> report;  // set when the eval stage ran
  std::optional<AlignmentResult> alignment;
  std::vector<Stage> computed;  // stages executed
  std::vector<Stage> reused;    // stages loaded from a matching stamp
};

/// Runs every stage up to and including `last`.
PipelineOutcome run_pipeline(const PipelineConfig& cfg, Stage last = Stage::eval,
                             bool resume = false, std::ostream* log = nullptr);

/// `source_id<TAB>target_id<TAB>provenance` per assigned source.
void write_alignment_result(const AlignmentResult& r, const std::vector<std::string>& source_ids,
                            const std::vector<std::string>& target_ids, std::ostream& out);

struct AlignmentRecord {
  std::string source;
  std::string target;
  Provenance provenance = Provenance::none;
};

std::vector<AlignmentRecord> read_alignment_result(std::istream& in,
                                                   const std::string& label = "<result>");

/// Ranked target lists: `source_id<TAB>t1<TAB>t2...`, best first.
void write_ranked(const std::vector<std::vector<Index>>& ranked,
                  const std::vector<std::string>& source_ids,
                  const std::vector<std::string>& target_ids, std::ostream& out);
std::unordered_map<std::string, std::vector<std::string>> read_ranked(
    std::istream& in, const std::string& label = "<ranked>");

/// Report over external ids, as produced by `eval --pred --gold [--ranked]`.
EvalReport evaluate_files(const std::filesystem::path& pred, const std::filesystem::path& gold,
                          const std::optional<std::filesystem::path>& ranked,
                          const std::vector<int>& ks = {1, 10});

}  // namespace kgalign

#endif  // KGALIGN_PIPELINE_HPP_
