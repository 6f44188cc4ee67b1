#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/data/frames.hpp"
#include "postmimic/evaluation/evaluate.hpp"
#include "postmimic/training/trainer.hpp"

namespace postmimic::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitDivergence = 4,
  kExitLeakage = 5,
};

/// Maps the currently handled exception to an exit code and prints it.
int report_exception(std::ostream& err);

/// Declarative experiment record. `seed` feeds the split and training seeds
/// unless those are given explicitly.
struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path corpus;
  std::filesystem::path output = "runs/experiment";
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  nlohmann::json model;
  nlohmann::json discriminator;
  training::TrainingConfig training;
  /// Evaluate the held-out split every this many steps (0 = never).
  std::int64_t validate_every = 0;
  /// Optional loss x capacity grid: {"distances": [...], "models": {name: model}}.
  nlohmann::json matrix;

  nlohmann::json to_json() const;
  /// Resolves presets and derived seeds; every problem is listed in one ContractError.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Parses JSON that may contain // and /* */ comments.
nlohmann::json parse_json_with_comments(const std::string& text, const std::string& origin);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides; value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Generator config for a preset name (small, axial, linear, identity) or a full record.
nlohmann::json resolve_model(const nlohmann::json& model);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  std::int64_t steps = 0;
  bool resumed_from_checkpoint = false;
};

/// Trains one experiment into config.output: config.resolved.json, split.json,
/// checkpoints/step_<n>.ckpt at cadence, model.ckpt and history.csv.
TrainOutcome run_train(const ExperimentConfig& config, bool resume);

/// Expands config.matrix into runs under config.output/<model>_<distance>,
/// evaluates each on the held-out split and writes matrix.csv.
void run_matrix(const ExperimentConfig& config, bool resume);

struct EvalOptions {
  std::filesystem::path corpus;
  std::filesystem::path output;
  std::size_t worst = 5;
  /// "test" scores the checkpoint's held-out loops, "all" every corpus loop.
  std::string split = "test";
};

/// Writes report.csv, summary.json, histograms.csv, density.csv and worst/*.pgm.
evaluation::MetricsReport run_eval(const models::Network& model, const data::SplitManifest& manifest,
                                   const EvalOptions& options);

/// Model plus held-out manifest stored in a checkpoint.
struct LoadedModel {
  std::unique_ptr<models::Network> model;
  data::SplitManifest manifest;
  std::int64_t step = 0;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);
/// Untrained preset for benchmarking or reference evaluation.
LoadedModel preset_model(const std::string& preset, std::uint64_t seed);

/// "HxW" or "N" (square).
Extent parse_extent(const std::string& s);

/// Processes a cineloop header, a .pgm image, or every such file in a directory.
/// Cineloop results go to the `output` directory; a single .pgm input writes the file `output`.
/// Returns the number of outputs written.
std::size_t run_infer(const models::Network& model, const std::filesystem::path& input,
                      const std::filesystem::path& output);

}  // namespace postmimic::cli
