#include "postmimic/cli/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <regex>
#include <set>

#include "postmimic/data/container.hpp"
#include "postmimic/errors.hpp"
#include "postmimic/models/archive.hpp"
#include "postmimic/models/generator.hpp"
#include "postmimic/models/simple.hpp"

namespace fs = std::filesystem;

namespace postmimic::cli {
namespace {

using training::Regime;

std::string step_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  const std::regex pattern(R"(step_(\d{8})\.ckpt)");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!std::regex_match(e.path().filename().string(), pattern)) continue;
    if (!best || e.path().filename() > best->filename()) best = e.path();
  }
  return best;
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

data::SplitManifest make_split(const ExperimentConfig& config, const data::Corpus& corpus) {
  const std::vector<std::string> ids = corpus.ids();
  data::SplitManifest m = data::split_by_cineloop(ids, config.test_fraction, config.split_seed);
  if (config.training.regime == Regime::kBlackbox) {
    auto [raw, processed] = data::make_unpaired_groups(m.train_ids, config.split_seed);
    m.raw_only_ids = std::move(raw);
    m.processed_only_ids = std::move(processed);
  }
  m.validate();
  return m;
}

// Experiment record without the fields allowed to change on resume.
nlohmann::json resume_key(nlohmann::json resolved) {
  resolved["training"].erase("steps");
  resolved["training"].erase("checkpoint_every");
  resolved.erase("validate_every");
  resolved.erase("output");
  return resolved;
}

nlohmann::json validation_summary(const models::Network& model, const data::Corpus& corpus,
                                  const data::SplitManifest& manifest, std::int64_t step) {
  const evaluation::MetricsReport r = evaluation::evaluate_testset(model, corpus, manifest, manifest.test_ids);
  nlohmann::json s = r.summary();
  s["step"] = step;
  return s;
}

}  // namespace

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ContractError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const LeakageError& e) {
    err << "leakage guard: " << e.what() << "\n";
    return kExitLeakage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const models::ArchiveError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NonFiniteError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

nlohmann::json parse_json_with_comments(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractError(origin + ": " + e.what());
  }
}

nlohmann::json read_json_file(const fs::path& path) {
  std::string text;
  try {
    text = data::read_file(path);
  } catch (const DataError&) {
    throw ContractError("cannot read config file " + path.string());
  }
  return parse_json_with_comments(text, path.string());
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ContractError("override '" + assignment + "' must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ContractError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

nlohmann::json resolve_model(const nlohmann::json& model) {
  if (model.is_null()) return models::GeneratorConfig::small().to_json();
  if (model.is_string()) {
    const std::string name = model.get<std::string>();
    if (name == "small") return models::GeneratorConfig::small().to_json();
    if (name == "axial") return models::GeneratorConfig::axial().to_json();
    if (name == "linear" || name == "identity") return {{"kind", name}};
    throw ContractError("unknown model preset '" + name + "' (expected small, axial, linear or identity)");
  }
  if (!model.is_object()) throw ContractError("model must be a preset name or an object");
  // Round-trip through the network to normalize defaults.
  return models::make_network(model, 0)->config_json();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"name", name},
                      {"corpus", corpus.string()},
                      {"output", output.string()},
                      {"seed", seed},
                      {"split", {{"seed", split_seed}, {"test_fraction", test_fraction}}},
                      {"model", model},
                      {"training", training.to_json()},
                      {"validate_every", validate_every}};
  if (!discriminator.is_null()) j["discriminator"] = discriminator;
  if (!matrix.is_null()) j["matrix"] = matrix;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"name",     "corpus",        "output",         "seed",  "split", "model",
                                              "training", "discriminator", "validate_every", "matrix"};
  std::vector<std::string> problems;
  if (!j.is_object()) throw ContractError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) problems.push_back("unknown key '" + key + "'");
  }
  ExperimentConfig c;
  const auto guard = [&problems](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  };
  guard("name", [&] { c.name = j.value("name", c.name); });
  guard("corpus", [&] {
    if (!j.contains("corpus")) throw ContractError("required");
    c.corpus = j.at("corpus").get<std::string>();
  });
  guard("output", [&] { c.output = j.value("output", c.output.string()); });
  guard("seed", [&] { c.seed = j.value("seed", c.seed); });
  guard("split", [&] {
    const nlohmann::json s = j.value("split", nlohmann::json::object());
    c.split_seed = s.value("seed", c.seed);
    c.test_fraction = s.value("test_fraction", c.test_fraction);
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ContractError("test_fraction must lie in (0, 1)");
  });
  guard("model", [&] { c.model = resolve_model(j.value("model", nlohmann::json())); });
  guard("training", [&] {
    nlohmann::json t = j.value("training", nlohmann::json::object());
    if (!t.contains("seed")) t["seed"] = c.seed;
    c.training = training::TrainingConfig::from_json(t);
  });
  guard("discriminator", [&] {
    if (j.contains("discriminator")) {
      nlohmann::json d = j.at("discriminator");
      d["kind"] = "patch_discriminator";
      c.discriminator = models::make_network(d, 0)->config_json();
    } else if (c.training.regime == Regime::kBlackbox) {
      c.discriminator = models::make_network({{"kind", "patch_discriminator"}}, 0)->config_json();
    }
  });
  guard("validate_every", [&] {
    c.validate_every = j.value("validate_every", c.validate_every);
    if (c.validate_every < 0) throw ContractError("must be >= 0");
  });
  guard("matrix", [&] {
    if (!j.contains("matrix")) return;
    const nlohmann::json& m = j.at("matrix");
    nlohmann::json resolved = {{"distances", nlohmann::json::array()}, {"models", nlohmann::json::object()}};
    for (const auto& d : m.value("distances", nlohmann::json::array({"mse", "mae", "ssim"}))) {
      training::distance_from_string(d.get<std::string>());
      resolved["distances"].push_back(d);
    }
    const nlohmann::json ms = m.value("models", nlohmann::json{{"small", "small"}, {"axial", "axial"}});
    if (!ms.is_object() || ms.empty()) throw ContractError("models must be a non-empty object of name: model");
    for (const auto& [name, model] : ms.items()) resolved["models"][name] = resolve_model(model);
    c.matrix = resolved;
  });
  if (!problems.empty()) {
    std::string msg = "invalid experiment config (" + std::to_string(problems.size()) + " problem(s)):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ContractError(msg);
  }
  return c;
}

TrainOutcome run_train(const ExperimentConfig& config, bool resume) {
  const data::Corpus corpus = data::ingest_external(config.corpus);
  if (corpus.loops.size() < 2) throw DataError("corpus " + config.corpus.string() + " needs at least 2 cineloops");
  const data::SplitManifest manifest = make_split(config, corpus);
  const nlohmann::json resolved = config.to_json();
  const nlohmann::json extra = {{"config", resolved}, {"split", manifest.to_json()}};
  const fs::path ckpt_dir = config.output / "checkpoints";
  fs::create_directories(ckpt_dir);
  data::write_file_atomic(config.output / "config.resolved.json", resolved.dump(2) + "\n");
  data::write_file_atomic(config.output / "split.json", manifest.to_json().dump(2) + "\n");

  TrainOutcome outcome;
  outcome.checkpoint = config.output / "model.ckpt";
  outcome.history = config.output / "history.csv";
  std::optional<models::Archive> previous;
  if (resume) {
    if (const auto latest = latest_checkpoint(ckpt_dir)) {
      previous = models::load_archive(*latest);
      const nlohmann::json stored = previous->config.at("experiment").at("config");
      if (resume_key(stored) != resume_key(resolved)) {
        throw ContractError("cannot resume: " + latest->string() +
                            " was produced by a different experiment config (only steps, checkpoint_every, "
                            "validate_every and output may change)");
      }
      outcome.resumed_from_checkpoint = true;
    }
  }
  const training::TrainingConfig& tc = config.training;
  const bool deterministic = tc.deterministic;

  const auto save = [&](const models::Archive& a, std::int64_t step, bool final_save) {
    if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0) models::save_archive(a, ckpt_dir / step_name(step));
    if (final_save) models::save_archive(a, outcome.checkpoint);
  };

  if (tc.regime == Regime::kGraybox) {
    training::GrayboxState state =
        previous ? training::graybox_from_archive(*previous)
                 : training::init_graybox(models::make_network(config.model, tc.seed), tc);
    const auto samples = training::paired_samples(corpus, manifest.train_ids);
    const auto after = [&](std::int64_t step) {
      if (config.validate_every > 0 && step % config.validate_every == 0) {
        state.history.validation.push_back(validation_summary(*state.generator, corpus, manifest, step));
      }
      if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0) save(training::graybox_archive(state, tc, extra), step, false);
    };
    try {
      training::train_graybox(state, samples, tc, after);
    } catch (...) {
      state.history.write_csv(outcome.history, deterministic);
      throw;
    }
    save(training::graybox_archive(state, tc, extra), state.step, true);
    state.history.write_csv(outcome.history, deterministic);
    outcome.steps = state.step;
  } else {
    training::CycleGanState state = previous ? training::cyclegan_from_archive(*previous)
                                             : training::init_cyclegan(config.model, config.discriminator, tc);
    const auto samples = training::unpaired_samples(corpus, manifest);
    const auto after = [&](std::int64_t step) {
      if (config.validate_every > 0 && step % config.validate_every == 0) {
        state.history.validation.push_back(validation_summary(*state.g_b, corpus, manifest, step));
      }
      if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0) save(training::cyclegan_archive(state, tc, extra), step, false);
    };
    try {
      training::train_blackbox(state, samples, tc, after);
    } catch (...) {
      state.history.write_csv(outcome.history, deterministic);
      throw;
    }
    save(training::cyclegan_archive(state, tc, extra), state.step, true);
    state.history.write_csv(outcome.history, deterministic);
    outcome.steps = state.step;
  }
  return outcome;
}

void run_matrix(const ExperimentConfig& config, bool resume) {
  if (config.matrix.is_null()) throw ContractError("--matrix requires a 'matrix' section in the config");
  const data::Corpus corpus = data::ingest_external(config.corpus);
  std::string table = "model,distance,params,mse_1e-3_mean,mse_1e-3_std,mae_1e-2_mean,mae_1e-2_std,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
  char buf[512];
  for (const auto& [name, model] : config.matrix.at("models").items()) {
    for (const auto& d : config.matrix.at("distances")) {
      ExperimentConfig run = config;
      run.matrix = nullptr;
      run.model = model;
      run.training.distance = training::distance_from_string(d.get<std::string>());
      run.name = config.name + "/" + name + "_" + d.get<std::string>();
      run.output = config.output / safe_name(name + "_" + d.get<std::string>());
      const TrainOutcome out = run_train(run, resume);
      const LoadedModel m = load_model(out.checkpoint);
      const evaluation::MetricsReport r = evaluation::evaluate_testset(*m.model, corpus, m.manifest, m.manifest.test_ids);
      data::write_file_atomic(run.output / "report.csv", r.csv());
      data::write_file_atomic(run.output / "summary.json", r.summary().dump(2) + "\n");
      std::snprintf(buf, sizeof buf, "%s,%s,%lld,%.6f,%.6f,%.6f,%.6f,%.4f,%.4f,%.6f,%.6f\n", name.c_str(),
                    d.get<std::string>().c_str(), static_cast<long long>(models::count_params(*m.model)),
                    r.mse.mean * 1e3, r.mse.std * 1e3, r.mae.mean * 1e2, r.mae.std * 1e2, r.psnr.mean, r.psnr.std,
                    r.ssim.mean, r.ssim.std);
      table += buf;
      data::write_file_atomic(config.output / "matrix.csv", table);
    }
  }
}

LoadedModel load_model(const fs::path& checkpoint) {
  const models::Archive a = models::load_archive(checkpoint);
  LoadedModel m;
  m.model = training::inference_model(a);
  m.step = a.training_state.value("step", std::int64_t{0});
  try {
    if (a.config.contains("experiment") && a.config.at("experiment").contains("split")) {
      m.manifest = data::SplitManifest::from_json(a.config.at("experiment").at("split"));
    }
  } catch (const std::exception& e) {
    throw models::ArchiveError(checkpoint.string() + ": stored split manifest is malformed: " + e.what());
  }
  return m;
}

LoadedModel preset_model(const std::string& preset, std::uint64_t seed) {
  LoadedModel m;
  m.model = models::make_network(resolve_model(preset), seed);
  return m;
}

Extent parse_extent(const std::string& s) {
  const std::regex pair(R"((\d+)[xX](\d+))");
  const std::regex single(R"(\d+)");
  std::smatch match;
  if (std::regex_match(s, match, pair)) return {std::stoi(match[1]), std::stoi(match[2])};
  if (std::regex_match(s, single)) return {std::stoi(s), std::stoi(s)};
  throw ContractError("extent '" + s + "' must look like 512x512 or 512");
}

evaluation::MetricsReport run_eval(const models::Network& model, const data::SplitManifest& manifest,
                                   const EvalOptions& options) {
  const data::Corpus corpus = data::ingest_external(options.corpus);
  std::vector<std::string> ids;
  if (options.split == "test") {
    if (manifest.test_ids.empty()) throw ContractError("model has no stored held-out split; use --split all");
    for (const auto& id : manifest.test_ids) {
      corpus.loop(id);  // throws DataError when absent
      ids.push_back(id);
    }
  } else if (options.split == "all") {
    ids = corpus.ids();
  } else {
    throw ContractError("--split must be test or all");
  }
  const evaluation::MetricsReport report = evaluation::evaluate_testset(model, corpus, manifest, ids);
  if (report.records.empty()) throw DataError("no frames to evaluate");
  const std::size_t k = std::min(options.worst, report.records.size());
  const auto worst = evaluation::worst_cases(report, k);
  const auto dist = evaluation::component_distribution(report);

  fs::create_directories(options.output);
  data::write_file_atomic(options.output / "report.csv", report.csv());
  data::write_file_atomic(options.output / "histograms.csv", evaluation::histogram_csv(dist));
  data::write_file_atomic(options.output / "density.csv", evaluation::density_csv(dist));
  nlohmann::json summary = report.summary();
  const auto component = [](const evaluation::ComponentSummary& c) {
    return nlohmann::json{{"mean", c.stats.mean}, {"std", c.stats.std}, {"min", c.min}, {"max", c.max},
                          {"bandwidth", c.kde.bandwidth}, {"bins", c.histogram.counts.size()}};
  };
  summary["components"] = {{"l", component(dist.l)}, {"cs", component(dist.cs)}};
  nlohmann::json worst_json = nlohmann::json::array();
  const fs::path gallery = options.output / "worst";
  fs::remove_all(gallery);
  for (std::size_t rank = 0; rank < worst.size(); ++rank) {
    const auto& r = worst[rank];
    worst_json.push_back({{"rank", rank}, {"frame_id", r.frame_id}, {"ssim", r.ssim}, {"l", r.l}, {"cs", r.cs}});
    const auto hash = r.frame_id.find('#');
    const std::string loop_id = r.frame_id.substr(0, hash);
    const std::size_t index = std::stoul(r.frame_id.substr(hash + 1));
    const Image input = data::to_unit_range(corpus.loop(loop_id).frames.at(index));
    const Image truth = data::to_unit_range(corpus.ground_truth(loop_id, index));
    const Image out = evaluation::run_frame(model, input);
    char prefix[64];
    std::snprintf(prefix, sizeof prefix, "%02zu_", rank);
    const std::string stem = prefix + safe_name(r.frame_id);
    evaluation::write_pgm(gallery / (stem + "_input.pgm"), input);
    evaluation::write_pgm(gallery / (stem + "_output.pgm"), out);
    evaluation::write_pgm(gallery / (stem + "_truth.pgm"), truth);
    evaluation::write_pgm(gallery / (stem + "_diff.pgm"), evaluation::difference_image(out, truth));
  }
  summary["worst"] = worst_json;
  summary["model"] = model.config_json();
  data::write_file_atomic(options.output / "summary.json", summary.dump(2) + "\n");
  return report;
}

std::size_t run_infer(const models::Network& model, const fs::path& input, const fs::path& output) {
  std::vector<fs::path> files;
  const bool batch = fs::is_directory(input);
  if (batch) {
    for (const auto& e : fs::directory_iterator(input)) {
      const auto ext = e.path().extension();
      if ((ext == ".json" && e.path().filename() != data::kCorpusManifestName) || ext == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    fs::create_directories(output);
  } else if (fs::exists(input)) {
    files.push_back(input);
  } else {
    throw DataError("input " + input.string() + " does not exist");
  }
  std::vector<std::string> problems;
  std::size_t written = 0;
  for (const fs::path& f : files) {
    try {
      if (f.extension() == ".pgm") {
        const Image out = evaluation::run_frame(model, evaluation::read_pgm(f));
        evaluation::write_pgm(batch ? output / f.filename() : output, out);
      } else {
        const data::LoadedLoop loop = data::read_cineloop(f);
        data::Cineloop result;
        result.id = loop.loop.id;
        result.scanner = loop.loop.scanner;
        result.target = loop.loop.target;
        result.seed = loop.loop.seed;
        for (const data::Frame& frame : loop.loop.frames) {
          Image out = evaluation::run_frame(model, data::to_unit_range(frame));
          for (double& v : out.values()) v = static_cast<float>(v);
          result.frames.emplace_back(std::move(out), data::ValueDomain::normalized());
        }
        data::write_cineloop(result, output, "processed", loop.loop.id);
      }
      ++written;
    } catch (const std::exception& e) {
      problems.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " input(s) could not be processed:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw DataError(msg);
  }
  return written;
}

}  // namespace postmimic::cli
