// Command-line entry point: synth, train, eval, bench, infer.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "postmimic/cli/experiment.hpp"
#include "postmimic/data/container.hpp"
#include "postmimic/data/synth.hpp"
#include "postmimic/errors.hpp"

namespace fs = std::filesystem;
using namespace postmimic;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<std::string> out;
};

cli::LoadedModel model_from_flags(const std::string& checkpoint, const std::string& preset, const Globals& g) {
  if (!checkpoint.empty() && !preset.empty()) throw ContractError("give either --checkpoint or --model, not both");
  if (!checkpoint.empty()) return cli::load_model(checkpoint);
  if (!preset.empty()) return cli::preset_model(preset, g.seed.value_or(0));
  throw ContractError("one of --checkpoint or --model is required");
}

fs::path require_out(const Globals& g, const char* command) {
  if (!g.out) throw ContractError(std::string(command) + " requires --out");
  return *g.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and evaluate image post-processing mimics on ultrasound cineloops"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->configurable(false);
  app.add_flag("--deterministic", g.deterministic, "Byte-reproducible outputs (single-threaded math, zero wall clock)");
  app.add_option("--out", g.out, "Output directory (or file for single-image infer)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic speckle corpus");
  std::string recipe_path;
  int count = 10;
  synth->add_option("--recipe,--spec", recipe_path, "Corpus recipe JSON (comments allowed)");
  synth->add_option("--count", count, "Number of cineloops")->check(CLI::NonNegativeNumber);

  // train
  auto* train = app.add_subcommand("train", "Train a gray-box or black-box model from an experiment config");
  std::string config_path;
  std::vector<std::string> overrides;
  bool resume = false;
  bool matrix = false;
  train->add_option("config", config_path, "Experiment config JSON")->required();
  train->add_option("--set", overrides, "Override a config key: training.steps=200");
  train->add_flag("--resume", resume, "Continue from the latest checkpoint in the output directory");
  train->add_flag("--matrix", matrix, "Run the loss x capacity grid from the config's matrix section");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a model on held-out cineloops");
  std::string checkpoint, preset;
  cli::EvalOptions eval_opts;
  std::string corpus_path;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint archive");
  eval->add_option("--model", preset, "Untrained preset instead of a checkpoint (small, axial, linear, identity)");
  eval->add_option("--corpus", corpus_path, "Corpus directory")->required();
  eval->add_option("--worst", eval_opts.worst, "Worst-case gallery size");
  eval->add_option("--split", eval_opts.split, "test (held-out loops of the checkpoint) or all")
      ->check(CLI::IsMember({"test", "all"}));

  // bench
  auto* bench = app.add_subcommand("bench", "Measure inference throughput and FLOPs");
  std::string extent_text = "512x512";
  int reps = 10;
  bench->add_option("--checkpoint", checkpoint, "Checkpoint archive");
  bench->add_option("--model", preset, "Untrained preset instead of a checkpoint");
  bench->add_option("--extent", extent_text, "Input extent, e.g. 512x512");
  bench->add_option("--reps", reps, "Timed repetitions (>= 10)");

  // infer
  auto* infer = app.add_subcommand("infer", "Apply a model to cineloops or graymaps");
  std::string input_path;
  infer->add_option("--checkpoint", checkpoint, "Checkpoint archive");
  infer->add_option("--model", preset, "Untrained preset instead of a checkpoint");
  infer->add_option("input", input_path, "Cineloop header, .pgm file, or a directory of them")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    training::set_deterministic_math(g.deterministic);
    if (*synth) {
      data::CorpusRecipe recipe;
      if (!recipe_path.empty()) recipe = data::CorpusRecipe::from_json(cli::read_json_file(recipe_path));
      const fs::path out = require_out(g, "synth");
      const data::Corpus corpus = data::make_synthetic_corpus(recipe, count, g.seed.value_or(0));
      data::write_corpus(corpus, out);
      std::cout << "wrote " << corpus.loops.size() << " cineloops to " << out.string() << "\n";
    } else if (*train) {
      nlohmann::json j = cli::read_json_file(config_path);
      if (g.seed) j["seed"] = *g.seed;
      if (g.out) j["output"] = *g.out;
      if (g.deterministic) j["training"]["deterministic"] = true;
      for (const auto& o : overrides) cli::apply_override(j, o);
      const cli::ExperimentConfig config = cli::ExperimentConfig::from_json(j);
      if (matrix) {
        cli::run_matrix(config, resume);
        std::cout << "matrix results in " << (config.output / "matrix.csv").string() << "\n";
      } else {
        const cli::TrainOutcome r = cli::run_train(config, resume);
        std::cout << (r.resumed_from_checkpoint ? "resumed; " : "") << "trained " << r.steps << " steps -> "
                  << r.checkpoint.string() << "\n";
      }
    } else if (*eval) {
      const cli::LoadedModel m = model_from_flags(checkpoint, preset, g);
      eval_opts.corpus = corpus_path;
      eval_opts.output = require_out(g, "eval");
      if (preset.size() && eval_opts.split == "test") eval_opts.split = "all";
      const evaluation::MetricsReport r = cli::run_eval(*m.model, m.manifest, eval_opts);
      std::printf("frames %zu  ssim %.4f +- %.4f  psnr %.2f +- %.2f  mse %.3g  mae %.3g\n", r.records.size(),
                  r.ssim.mean, r.ssim.std, r.psnr.mean, r.psnr.std, r.mse.mean, r.mae.mean);
    } else if (*bench) {
      const cli::LoadedModel m = model_from_flags(checkpoint, preset, g);
      const auto result = evaluation::benchmark_inference(*m.model, cli::parse_extent(extent_text), reps);
      const std::string text = result.to_json().dump(2) + "\n";
      if (g.out) {
        fs::create_directories(*g.out);
        data::write_file_atomic(fs::path(*g.out) / "bench.json", text);
      }
      std::cout << text;
    } else if (*infer) {
      const cli::LoadedModel m = model_from_flags(checkpoint, preset, g);
      const std::size_t n = cli::run_infer(*m.model, input_path, require_out(g, "infer"));
      std::cout << "wrote " << n << " output(s)\n";
    }
  } catch (...) {
    return cli::report_exception(std::cerr);
  }
  return cli::kExitOk;
}
