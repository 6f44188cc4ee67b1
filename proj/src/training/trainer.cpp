#include "postmimic/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "postmimic/errors.hpp"
#include "postmimic/models/simple.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace postmimic::training {
namespace {

using models::Archive;
using models::Network;
using models::Phase;
using models::Tape;
using Clock = std::chrono::steady_clock;

nlohmann::json adam_json(const nn::AdamConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

nn::AdamConfig adam_from_json(const nlohmann::json& j, std::vector<std::string>& problems, const std::string& where) {
  nn::AdamConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key != "learning_rate" && key != "beta1" && key != "beta2" && key != "epsilon") {
      problems.push_back(where + ": unknown key '" + key + "'");
    }
  }
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  return c;
}

void check_adam(const nn::AdamConfig& c, const std::string& where, std::vector<std::string>& problems) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) problems.push_back(where + ".learning_rate must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) problems.push_back(where + ".beta1 must lie in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) problems.push_back(where + ".beta2 must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) problems.push_back(where + ".epsilon must be > 0");
}

std::string batch_ids(const std::vector<std::size_t>& indices, const auto& samples) {
  std::string out = "[";
  for (std::size_t i = 0; i < indices.size(); ++i) out += (i ? "," : "") + samples[indices[i]].frame_id;
  return out + "]";
}

void require_finite(double value, const std::string& what, std::int64_t step, const std::string& batch) {
  if (!std::isfinite(value)) {
    throw NonFiniteError("non-finite " + what + " loss at step " + std::to_string(step) + ", batch " + batch);
  }
}

nn::Tensor crop_batch(const BatchPlan& plan, const std::vector<const Image*>& sources, Extent crop) {
  nn::Tensor out({static_cast<int>(plan.indices.size()), 1, crop.height, crop.width});
  for (std::size_t i = 0; i < plan.indices.size(); ++i) {
    const Image img = data::apply_crop(*sources[plan.indices[i]], plan.windows[i]);
    auto dst = out.plane(static_cast<int>(i), 0);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<float>(img[k]);
  }
  return out;
}

void add_scaled(nn::Tensor& acc, const nn::Tensor& g, double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<float>(scale * g[i]);
}

nn::Tensor scaled(const nn::Tensor& g, double scale) {
  nn::Tensor out = g;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(scale * g[i]);
  return out;
}

void require_crop_fits(const Network& net, Extent crop, const std::string& what) {
  const int d = net.spatial_divisor();
  if (crop.height % d != 0 || crop.width % d != 0) {
    throw ContractError("training crop " + crop.str() + " is not divisible by the " + what + " divisor " +
                        std::to_string(d));
  }
}

double elapsed_since(Clock::time_point start, double offset) {
  return offset + std::chrono::duration<double>(Clock::now() - start).count();
}

double last_wall_clock(const TrainingHistory& h) { return h.rows.empty() ? 0.0 : h.rows.back().wall_clock; }

nlohmann::json base_config(const std::string& regime, const TrainingConfig& config, const nlohmann::json& extra) {
  return {{"format", "postmimic-checkpoint"}, {"regime", regime}, {"training", config.to_json()}, {"experiment", extra}};
}

std::unique_ptr<Network> restore(const Archive& a, const std::string& config_key, const std::string& prefix) {
  auto net = models::make_network(a.config.at(config_key), 0);
  models::restore_network(a, prefix, *net);
  return net;
}

}  // namespace

std::string to_string(Regime r) { return r == Regime::kGraybox ? "graybox" : "blackbox"; }

Regime regime_from_string(const std::string& s) {
  if (s == "graybox") return Regime::kGraybox;
  if (s == "blackbox") return Regime::kBlackbox;
  throw ContractError("unknown regime '" + s + "' (expected graybox or blackbox)");
}

void TrainingConfig::validate() const {
  std::vector<std::string> problems;
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (steps < 0) problems.push_back("steps must be >= 0");
  if (regime == Regime::kBlackbox && !(cycle_weight > 0.0)) problems.push_back("cycle_weight must be > 0 for blackbox");
  if (!(cycle_weight >= 0.0) || !std::isfinite(cycle_weight)) problems.push_back("cycle_weight must be finite and >= 0");
  if (!(adversarial_weight >= 0.0) || !std::isfinite(adversarial_weight)) {
    problems.push_back("adversarial_weight must be finite and >= 0");
  }
  if (checkpoint_every < 0) problems.push_back("checkpoint_every must be >= 0");
  if (crop.height < 1 || crop.width < 1) problems.push_back("crop must be positive");
  if (divergence_window < 1) problems.push_back("divergence_window must be >= 1");
  check_adam(generator_optimizer, "generator_optimizer", problems);
  check_adam(discriminator_optimizer, "discriminator_optimizer", problems);
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ContractError(msg);
  }
}

nlohmann::json TrainingConfig::to_json() const {
  return {{"regime", to_string(regime)},
          {"distance", to_string(distance)},
          {"adversarial", to_string(adversarial)},
          {"cycle_weight", cycle_weight},
          {"adversarial_weight", adversarial_weight},
          {"batch_size", batch_size},
          {"steps", steps},
          {"seed", seed},
          {"generator_optimizer", adam_json(generator_optimizer)},
          {"discriminator_optimizer", adam_json(discriminator_optimizer)},
          {"checkpoint_every", checkpoint_every},
          {"crop", {crop.height, crop.width}},
          {"divergence_window", divergence_window},
          {"deterministic", deterministic}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"regime",         "distance",          "adversarial",
                                              "cycle_weight",   "adversarial_weight", "batch_size",
                                              "steps",          "seed",              "generator_optimizer",
                                              "discriminator_optimizer", "checkpoint_every", "crop",
                                              "divergence_window", "deterministic"};
  std::vector<std::string> problems;
  if (!j.is_object()) throw ContractError("training config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) problems.push_back("unknown training key '" + key + "'");
  }
  TrainingConfig c;
  const auto field = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const nlohmann::json::exception&) {
      problems.push_back(std::string(key) + " has the wrong type");
    }
  };
  const auto enum_field = [&](const char* key, auto& target, auto parse) {
    if (!j.contains(key)) return;
    try {
      target = parse(j.at(key).get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(std::string(key) + ": " + e.what());
    }
  };
  enum_field("regime", c.regime, regime_from_string);
  enum_field("distance", c.distance, distance_from_string);
  enum_field("adversarial", c.adversarial, adversarial_from_string);
  field("cycle_weight", c.cycle_weight);
  field("adversarial_weight", c.adversarial_weight);
  field("batch_size", c.batch_size);
  field("steps", c.steps);
  field("seed", c.seed);
  field("checkpoint_every", c.checkpoint_every);
  field("divergence_window", c.divergence_window);
  field("deterministic", c.deterministic);
  if (j.contains("generator_optimizer")) c.generator_optimizer = adam_from_json(j["generator_optimizer"], problems, "generator_optimizer");
  if (j.contains("discriminator_optimizer")) {
    c.discriminator_optimizer = adam_from_json(j["discriminator_optimizer"], problems, "discriminator_optimizer");
  }
  if (j.contains("crop")) {
    std::vector<int> crop;
    field("crop", crop);
    if (crop.size() == 2) {
      c.crop = {crop[0], crop[1]};
    } else {
      problems.push_back("crop must be [height, width]");
    }
  }
  try {
    c.validate();
  } catch (const ContractError& e) {
    std::string msg = e.what();
    problems.push_back(msg.substr(msg.find('\n') + 5));
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ContractError(msg);
  }
  return c;
}

void set_deterministic_math(bool on) {
  if (on) openblas_set_num_threads(1);
}

std::string TrainingHistory::csv(bool zero_wall_clock) const {
  std::string out = "step";
  for (const auto& c : columns) out += "," + c;
  out += ",wall_clock\n";
  char buf[64];
  for (const HistoryRow& r : rows) {
    out += std::to_string(r.step);
    for (const double v : r.losses) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", zero_wall_clock ? 0.0 : r.wall_clock);
    out += buf;
  }
  return out;
}

void TrainingHistory::write_csv(const std::filesystem::path& path, bool zero_wall_clock) const {
  data::write_file_atomic(path, csv(zero_wall_clock));
}

nlohmann::json TrainingHistory::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const HistoryRow& r : rows) rows_json.push_back({{"step", r.step}, {"losses", r.losses}, {"wall_clock", r.wall_clock}});
  return {{"columns", columns}, {"rows", rows_json}, {"log_clamps", log_clamps}, {"validation", validation}};
}

TrainingHistory TrainingHistory::from_json(const nlohmann::json& j) {
  TrainingHistory h;
  h.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    h.rows.push_back({r.at("step").get<std::int64_t>(), r.at("losses").get<std::vector<double>>(),
                      r.at("wall_clock").get<double>()});
  }
  h.log_clamps = j.value("log_clamps", std::int64_t{0});
  h.validation = j.value("validation", std::vector<nlohmann::json>{});
  return h;
}

NetOptimizer::NetOptimizer(const Network& net, nn::AdamConfig config) : config_(config) {
  for (const models::Param* p : net.params()) {
    if (p->kind == models::ParamKind::kTrainable) states_.emplace_back(p->count());
  }
}

void NetOptimizer::step(Network& net, const std::string& op) {
  std::size_t k = 0;
  for (models::Param* p : net.params()) {
    if (p->kind != models::ParamKind::kTrainable) continue;
    if (k >= states_.size()) throw ContractError("optimizer does not match network " + op);
    nn::adam_step<float>(p->value, p->grad, states_[k++], config_, op + ":" + p->name);
  }
  ++steps_;
}

void NetOptimizer::append(Archive& archive, const std::string& prefix, const Network& net) const {
  std::size_t k = 0;
  for (const models::Param* p : net.params()) {
    if (p->kind != models::ParamKind::kTrainable) continue;
    archive.tensors.push_back({prefix + "/" + p->name + "@adam_m", "optimizer", p->shape, states_.at(k).first_moment});
    archive.tensors.push_back({prefix + "/" + p->name + "@adam_v", "optimizer", p->shape, states_.at(k).second_moment});
    ++k;
  }
}

void NetOptimizer::restore(const Archive& archive, const std::string& prefix, const Network& net, std::int64_t steps) {
  std::size_t k = 0;
  for (const models::Param* p : net.params()) {
    if (p->kind != models::ParamKind::kTrainable) continue;
    const auto& m = archive.tensor(prefix + "/" + p->name + "@adam_m");
    const auto& v = archive.tensor(prefix + "/" + p->name + "@adam_v");
    if (m.values.size() != p->count() || v.values.size() != p->count()) {
      throw models::ArchiveError("optimizer state for " + p->name + " has the wrong size");
    }
    states_.at(k).first_moment = m.values;
    states_.at(k).second_moment = v.values;
    states_.at(k).step = steps;
    ++k;
  }
  steps_ = steps;
}

std::vector<PairedSample> paired_samples(const data::Corpus& corpus, const std::vector<std::string>& loop_ids) {
  std::vector<PairedSample> out;
  for (const auto& id : loop_ids) {
    const data::Cineloop& loop = corpus.loop(id);
    for (std::size_t i = 0; i < loop.frames.size(); ++i) {
      out.push_back({data::frame_id(id, i), data::to_unit_range(loop.frames[i]),
                     data::to_unit_range(corpus.ground_truth(id, i))});
    }
  }
  return out;
}

UnpairedSamples unpaired_samples(const data::Corpus& corpus, const data::SplitManifest& manifest) {
  manifest.validate();
  if (!manifest.has_unpaired_groups()) throw ContractError("unpaired_samples: manifest has no unpaired groups");
  UnpairedSamples out;
  for (const auto& id : manifest.raw_only_ids) {
    const data::Cineloop& loop = corpus.loop(id);
    for (std::size_t i = 0; i < loop.frames.size(); ++i) {
      out.raw.push_back({data::frame_id(id, i), data::to_unit_range(loop.frames[i])});
    }
  }
  for (const auto& id : manifest.processed_only_ids) {
    const data::Cineloop& loop = corpus.loop(id);
    for (std::size_t i = 0; i < loop.frames.size(); ++i) {
      out.processed.push_back({data::frame_id(id, i), data::to_unit_range(corpus.ground_truth(id, i))});
    }
  }
  return out;
}

BatchPlan plan_batch(std::size_t sample_count, const std::vector<Extent>& extents, const TrainingConfig& config,
                     std::uint64_t stream, std::int64_t step) {
  if (sample_count == 0) throw ContractError("plan_batch: no samples");
  if (extents.size() != sample_count) throw ContractError("plan_batch: extents do not match the sample count");
  Rng rng({config.seed, stream, static_cast<std::uint64_t>(step)});
  BatchPlan plan;
  for (int i = 0; i < config.batch_size; ++i) {
    const std::size_t idx = rng.below(sample_count);
    plan.indices.push_back(idx);
    plan.windows.push_back(data::plan_random_crop(extents[idx], config.crop, rng));
  }
  return plan;
}

GrayboxState init_graybox(std::unique_ptr<Network> generator, const TrainingConfig& config) {
  config.validate();
  GrayboxState s;
  s.optimizer = NetOptimizer(*generator, config.generator_optimizer);
  s.generator = std::move(generator);
  return s;
}

void train_graybox(GrayboxState& state, const std::vector<PairedSample>& data, const TrainingConfig& config,
                   const StepCallback& after_step) {
  config.validate();
  if (config.regime != Regime::kGraybox) throw ContractError("train_graybox: config regime is not graybox");
  if (data.empty() && state.step < config.steps) throw ContractError("train_graybox: no training samples");
  Network& g = *state.generator;
  require_crop_fits(g, config.crop, "generator");
  set_deterministic_math(config.deterministic);
  if (state.history.columns.empty()) state.history.columns = {loss_column(config.distance)};

  std::vector<Extent> extents;
  std::vector<const Image*> inputs, targets;
  for (const PairedSample& s : data) {
    require_same_extent(s.input, s.target, "train_graybox");
    extents.push_back(s.input.extent());
    inputs.push_back(&s.input);
    targets.push_back(&s.target);
  }
  const auto start = Clock::now();
  const double offset = last_wall_clock(state.history);
  for (; state.step < config.steps;) {
    const std::int64_t step = state.step;
    const BatchPlan plan = plan_batch(data.size(), extents, config, kPairedStream, step);
    const nn::Tensor x = crop_batch(plan, inputs, config.crop);
    const nn::Tensor y = crop_batch(plan, targets, config.crop);
    g.zero_grad();
    std::unique_ptr<Tape> tape;
    const nn::Tensor out = g.forward(x, Phase::kTrain, &tape);
    const TensorLoss loss = distance_loss(out, y, config.distance);
    require_finite(loss.value, loss_column(config.distance), step, batch_ids(plan.indices, data));
    g.backward(*tape, loss.grad);
    state.optimizer.step(g, "generator");
    state.history.rows.push_back({step, {loss.value}, config.deterministic ? 0.0 : elapsed_since(start, offset)});
    state.step = step + 1;
    if (after_step) after_step(state.step);
  }
}

CycleGanState init_cyclegan(const nlohmann::json& generator_config, const nlohmann::json& discriminator_config,
                            const TrainingConfig& config) {
  config.validate();
  CycleGanState s;
  s.g_b = models::make_network(generator_config, config.seed);
  s.g_a = models::make_network(generator_config, config.seed + 1);
  s.d_a = models::make_network(discriminator_config, config.seed + 2);
  s.d_b = models::make_network(discriminator_config, config.seed + 3);
  s.opt_g_a = NetOptimizer(*s.g_a, config.generator_optimizer);
  s.opt_g_b = NetOptimizer(*s.g_b, config.generator_optimizer);
  s.opt_d_a = NetOptimizer(*s.d_a, config.discriminator_optimizer);
  s.opt_d_b = NetOptimizer(*s.d_b, config.discriminator_optimizer);
  return s;
}

void train_blackbox(CycleGanState& state, const UnpairedSamples& data, const TrainingConfig& config,
                    const StepCallback& after_step) {
  config.validate();
  if (config.regime != Regime::kBlackbox) throw ContractError("train_blackbox: config regime is not blackbox");
  if ((data.raw.empty() || data.processed.empty()) && state.step < config.steps) {
    throw ContractError("train_blackbox: both unpaired groups need samples");
  }
  require_crop_fits(*state.g_a, config.crop, "generator");
  require_crop_fits(*state.d_a, config.crop, "discriminator");
  set_deterministic_math(config.deterministic);
  const bool logistic = config.adversarial == AdversarialKind::kLogistic;
  if (state.history.columns.empty()) {
    state.history.columns = {"d_a", "d_b", "adv_a", "adv_b", "cycle_a", "cycle_b"};
    if (logistic) state.history.columns.push_back("log_clamps");
  }

  std::vector<Extent> raw_extents, proc_extents;
  std::vector<const Image*> raw_images, proc_images;
  for (const auto& s : data.raw) {
    raw_extents.push_back(s.image.extent());
    raw_images.push_back(&s.image);
  }
  for (const auto& s : data.processed) {
    proc_extents.push_back(s.image.extent());
    proc_images.push_back(&s.image);
  }
  const auto start = Clock::now();
  const double offset = last_wall_clock(state.history);

  for (; state.step < config.steps;) {
    const std::int64_t step = state.step;
    const BatchPlan pa = plan_batch(data.raw.size(), raw_extents, config, kRawStream, step);
    const BatchPlan pb = plan_batch(data.processed.size(), proc_extents, config, kProcessedStream, step);
    BlackboxStepOptions options;
    options.batch_ids = "raw " + batch_ids(pa.indices, data.raw) + " processed " + batch_ids(pb.indices, data.processed);
    const nn::Tensor a = crop_batch(pa, raw_images, config.crop);
    const nn::Tensor b = crop_batch(pb, proc_images, config.crop);
    const BlackboxStepLosses l = blackbox_step(state, a, b, config, options);

    state.history.log_clamps += l.clamped;
    std::vector<double> row = {l.d_a, l.d_b, l.adv_a, l.adv_b, l.cycle_a, l.cycle_b};
    if (logistic) row.push_back(static_cast<double>(l.clamped));
    state.history.rows.push_back({step, row, config.deterministic ? 0.0 : elapsed_since(start, offset)});
    state.step = step + 1;

    state.saturated_a = l.saturated_a ? state.saturated_a + 1 : 0;
    state.saturated_b = l.saturated_b ? state.saturated_b + 1 : 0;
    if (state.saturated_a >= config.divergence_window || state.saturated_b >= config.divergence_window) {
      std::ostringstream msg;
      msg << "black-box training diverged at step " << step << ": generator adversarial loss saturated for "
          << std::max(state.saturated_a, state.saturated_b) << " consecutive steps (adv_a " << l.adv_a << ", adv_b "
          << l.adv_b << ", d_a " << l.d_a << ", d_b " << l.d_b
          << "); consider a larger generator or a smaller discriminator";
      throw DivergenceError(msg.str());
    }
    if (after_step) after_step(state.step);
  }
}

BlackboxStepLosses blackbox_step(CycleGanState& state, const nn::Tensor& a, const nn::Tensor& b,
                                 const TrainingConfig& config, const BlackboxStepOptions& options) {
  Network& g_a = *state.g_a;
  Network& g_b = *state.g_b;
  Network& d_a = *state.d_a;
  Network& d_b = *state.d_b;
  const std::int64_t step = state.step;
  const std::string& ids = options.batch_ids;
  const double lambda = options.cycle_weight.value_or(config.cycle_weight);
  const double w_adv = options.adversarial_weight.value_or(config.adversarial_weight);
  const auto phase_done = [&](std::string_view phase) {
    if (options.after_phase) options.after_phase(phase);
  };
  BlackboxStepLosses out;

  // Generator passes for both cycle directions.
  std::unique_ptr<Tape> t_fake_b, t_rec_a, t_fake_a, t_rec_b;
  const nn::Tensor fake_b = g_b.forward(a, Phase::kTrain, &t_fake_b);
  const nn::Tensor rec_a = g_a.forward(fake_b, Phase::kTrain, &t_rec_a);
  const nn::Tensor fake_a = g_a.forward(b, Phase::kTrain, &t_fake_a);
  const nn::Tensor rec_b = g_b.forward(fake_a, Phase::kTrain, &t_rec_b);

  const auto update_discriminator = [&](Network& d, NetOptimizer& opt, const nn::Tensor& real, const nn::Tensor& fake,
                                        const char* name) {
    d.zero_grad();
    std::unique_ptr<Tape> tr, tf;
    const nn::Tensor sr = d.forward(real, Phase::kTrain, &tr);
    const nn::Tensor sf = d.forward(fake, Phase::kTrain, &tf);
    const DiscriminatorLoss l = discriminator_loss(config.adversarial, sr, sf);
    require_finite(l.value, name, step, ids);
    d.backward(*tr, l.grad_real);
    d.backward(*tf, l.grad_fake);
    opt.step(d, name);
    out.clamped += l.clamped;
    return l.value;
  };
  if (options.update_discriminators) {
    out.d_a = update_discriminator(d_a, state.opt_d_a, a, fake_a, "d_a");
    phase_done("d_a");
    out.d_b = update_discriminator(d_b, state.opt_d_b, b, fake_b, "d_b");
    phase_done("d_b");
  }

  g_a.zero_grad();
  g_b.zero_grad();
  std::unique_ptr<Tape> t_sa, t_sb;
  const nn::Tensor score_a = d_a.forward(fake_a, Phase::kTrainFrozenStats, &t_sa);
  const nn::Tensor score_b = d_b.forward(fake_b, Phase::kTrainFrozenStats, &t_sb);
  const GeneratorLoss adv_a = generator_loss(config.adversarial, score_a);
  const GeneratorLoss adv_b = generator_loss(config.adversarial, score_b);
  const TensorLoss cyc_a = distance_loss(rec_a, a, config.distance);
  const TensorLoss cyc_b = distance_loss(rec_b, b, config.distance);
  out.clamped += adv_a.clamped + adv_b.clamped;
  require_finite(adv_a.value, "adv_a", step, ids);
  require_finite(adv_b.value, "adv_b", step, ids);
  require_finite(cyc_a.value, "cycle_a", step, ids);
  require_finite(cyc_b.value, "cycle_b", step, ids);

  nn::Tensor grad_fake_b = d_b.backward(*t_sb, scaled(adv_b.grad_fake, w_adv), false);
  nn::Tensor grad_fake_a = d_a.backward(*t_sa, scaled(adv_a.grad_fake, w_adv), false);
  add_scaled(grad_fake_b, g_a.backward(*t_rec_a, scaled(cyc_a.grad, lambda)), 1.0);
  add_scaled(grad_fake_a, g_b.backward(*t_rec_b, scaled(cyc_b.grad, lambda)), 1.0);
  g_b.backward(*t_fake_b, grad_fake_b);
  g_a.backward(*t_fake_a, grad_fake_a);
  state.opt_g_a.step(g_a, "g_a");
  state.opt_g_b.step(g_b, "g_b");
  phase_done("generators");

  out.adv_a = adv_a.value;
  out.adv_b = adv_b.value;
  out.cycle_a = cyc_a.value;
  out.cycle_b = cyc_b.value;
  out.saturated_a = adv_a.saturated;
  out.saturated_b = adv_b.saturated;
  return out;
}

Archive graybox_archive(const GrayboxState& state, const TrainingConfig& config, const nlohmann::json& extra) {
  Archive a;
  a.config = base_config("graybox", config, extra);
  a.config["generator"] = state.generator->config_json();
  a.training_state = {{"step", state.step}, {"history", state.history.to_json()}};
  models::append_network(a, "generator", *state.generator);
  state.optimizer.append(a, "generator", *state.generator);
  return a;
}

Archive cyclegan_archive(const CycleGanState& state, const TrainingConfig& config, const nlohmann::json& extra) {
  Archive a;
  a.config = base_config("blackbox", config, extra);
  a.config["generator"] = state.g_b->config_json();
  a.config["discriminator"] = state.d_b->config_json();
  a.training_state = {{"step", state.step},
                      {"saturated_a", state.saturated_a},
                      {"saturated_b", state.saturated_b},
                      {"history", state.history.to_json()}};
  const std::pair<const char*, const Network*> nets[] = {
      {"g_a", state.g_a.get()}, {"g_b", state.g_b.get()}, {"d_a", state.d_a.get()}, {"d_b", state.d_b.get()}};
  for (const auto& [prefix, net] : nets) models::append_network(a, prefix, *net);
  state.opt_g_a.append(a, "g_a", *state.g_a);
  state.opt_g_b.append(a, "g_b", *state.g_b);
  state.opt_d_a.append(a, "d_a", *state.d_a);
  state.opt_d_b.append(a, "d_b", *state.d_b);
  return a;
}

TrainingConfig config_from_archive(const Archive& archive) {
  try {
    return TrainingConfig::from_json(archive.config.at("training"));
  } catch (const nlohmann::json::exception& e) {
    throw models::ArchiveError(std::string("checkpoint lacks a training config: ") + e.what());
  }
}

GrayboxState graybox_from_archive(const Archive& archive) {
  try {
    if (archive.config.at("regime") != "graybox") throw models::ArchiveError("checkpoint is not a gray-box run");
    const TrainingConfig config = config_from_archive(archive);
    GrayboxState s = init_graybox(restore(archive, "generator", "generator"), config);
    s.step = archive.training_state.at("step").get<std::int64_t>();
    s.optimizer.restore(archive, "generator", *s.generator, s.step);
    s.history = TrainingHistory::from_json(archive.training_state.at("history"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw models::ArchiveError(std::string("gray-box checkpoint is incomplete: ") + e.what());
  }
}

CycleGanState cyclegan_from_archive(const Archive& archive) {
  try {
    if (archive.config.at("regime") != "blackbox") throw models::ArchiveError("checkpoint is not a black-box run");
    CycleGanState s;
    s.g_a = restore(archive, "generator", "g_a");
    s.g_b = restore(archive, "generator", "g_b");
    s.d_a = restore(archive, "discriminator", "d_a");
    s.d_b = restore(archive, "discriminator", "d_b");
    const TrainingConfig config = config_from_archive(archive);
    s.opt_g_a = NetOptimizer(*s.g_a, config.generator_optimizer);
    s.opt_g_b = NetOptimizer(*s.g_b, config.generator_optimizer);
    s.opt_d_a = NetOptimizer(*s.d_a, config.discriminator_optimizer);
    s.opt_d_b = NetOptimizer(*s.d_b, config.discriminator_optimizer);
    s.step = archive.training_state.at("step").get<std::int64_t>();
    s.opt_g_a.restore(archive, "g_a", *s.g_a, s.step);
    s.opt_g_b.restore(archive, "g_b", *s.g_b, s.step);
    s.opt_d_a.restore(archive, "d_a", *s.d_a, s.step);
    s.opt_d_b.restore(archive, "d_b", *s.d_b, s.step);
    s.saturated_a = archive.training_state.at("saturated_a").get<std::int64_t>();
    s.saturated_b = archive.training_state.at("saturated_b").get<std::int64_t>();
    s.history = TrainingHistory::from_json(archive.training_state.at("history"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw models::ArchiveError(std::string("black-box checkpoint is incomplete: ") + e.what());
  }
}

std::unique_ptr<Network> inference_model(const Archive& archive) {
  try {
    const std::string regime = archive.config.at("regime").get<std::string>();
    if (regime == "graybox") return restore(archive, "generator", "generator");
    if (regime == "blackbox") return restore(archive, "generator", "g_b");
    throw models::ArchiveError("checkpoint has unknown regime '" + regime + "'");
  } catch (const nlohmann::json::exception& e) {
    throw models::ArchiveError(std::string("checkpoint config is incomplete: ") + e.what());
  }
}

}  // namespace postmimic::training
