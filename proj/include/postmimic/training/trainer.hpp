#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/data/container.hpp"
#include "postmimic/models/archive.hpp"
#include "postmimic/models/network.hpp"
#include "postmimic/nn/adam.hpp"
#include "postmimic/training/losses.hpp"

namespace postmimic::training {

enum class Regime { kGraybox, kBlackbox };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct TrainingConfig {
  Regime regime = Regime::kGraybox;
  Distance distance = Distance::kSsim;
  AdversarialKind adversarial = AdversarialKind::kLeastSquares;
  double cycle_weight = 10.0;
  double adversarial_weight = 1.0;
  int batch_size = 4;
  std::int64_t steps = 1000;
  std::uint64_t seed = 0;
  nn::AdamConfig generator_optimizer;
  nn::AdamConfig discriminator_optimizer;
  /// Checkpoint every this many steps; 0 keeps only the final checkpoint.
  std::int64_t checkpoint_every = 0;
  /// Training crop extent; must be divisible by the networks' spatial divisors.
  Extent crop{64, 64};
  /// Consecutive saturated steps that abort black-box training.
  std::int64_t divergence_window = 500;
  /// Zero wall-clock columns and single-threaded BLAS.
  bool deterministic = false;

  /// Throws ContractError listing every invalid field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are errors.
  static TrainingConfig from_json(const nlohmann::json& j);
};

/// Pins BLAS to one thread so reductions happen in a fixed order.
void set_deterministic_math(bool on);

struct HistoryRow {
  std::int64_t step = 0;
  std::vector<double> losses;
  double wall_clock = 0.0;
};

struct TrainingHistory {
  std::vector<std::string> columns;  // loss columns only
  std::vector<HistoryRow> rows;
  std::int64_t log_clamps = 0;
  /// Periodic validation summaries appended by callers.
  std::vector<nlohmann::json> validation;

  /// Header "step,<columns>,wall_clock"; losses printed with 17 significant digits.
  std::string csv(bool zero_wall_clock) const;
  void write_csv(const std::filesystem::path& path, bool zero_wall_clock) const;
  nlohmann::json to_json() const;
  static TrainingHistory from_json(const nlohmann::json& j);
};

/// Adam state for every trainable parameter of one network.
class NetOptimizer {
 public:
  NetOptimizer() = default;
  NetOptimizer(const models::Network& net, nn::AdamConfig config);

  /// Applies one update from the accumulated Param::grad values.
  void step(models::Network& net, const std::string& op);
  std::int64_t steps() const { return steps_; }

  void append(models::Archive& archive, const std::string& prefix, const models::Network& net) const;
  void restore(const models::Archive& archive, const std::string& prefix, const models::Network& net,
               std::int64_t steps);

 private:
  nn::AdamConfig config_;
  std::vector<nn::AdamState<float>> states_;
  std::int64_t steps_ = 0;
};

/// A normalized input/target pair identified by its frame id.
struct PairedSample {
  std::string frame_id;
  Image input;
  Image target;
};

struct FrameSample {
  std::string frame_id;
  Image image;
};

/// Raw frames mapped to [0,1] paired with their ground truth.
std::vector<PairedSample> paired_samples(const data::Corpus& corpus, const std::vector<std::string>& loop_ids);
/// Raw-only group inputs and processed-only group targets.
struct UnpairedSamples {
  std::vector<FrameSample> raw;
  std::vector<FrameSample> processed;
};
UnpairedSamples unpaired_samples(const data::Corpus& corpus, const data::SplitManifest& manifest);

/// Sample indices and crop windows of one batch; a pure function of (seed, stream, step).
struct BatchPlan {
  std::vector<std::size_t> indices;
  std::vector<data::CropWindow> windows;
};
BatchPlan plan_batch(std::size_t sample_count, const std::vector<Extent>& extents, const TrainingConfig& config,
                     std::uint64_t stream, std::int64_t step);

inline constexpr std::uint64_t kPairedStream = 1;
inline constexpr std::uint64_t kRawStream = 2;
inline constexpr std::uint64_t kProcessedStream = 3;

using StepCallback = std::function<void(std::int64_t step)>;

struct GrayboxState {
  std::unique_ptr<models::Network> generator;
  NetOptimizer optimizer;
  std::int64_t step = 0;
  TrainingHistory history;
};

GrayboxState init_graybox(std::unique_ptr<models::Network> generator, const TrainingConfig& config);
/// Runs from state.step to config.steps. Throws NonFiniteError naming the step and batch.
void train_graybox(GrayboxState& state, const std::vector<PairedSample>& data, const TrainingConfig& config,
                   const StepCallback& after_step = {});

struct CycleGanState {
  std::unique_ptr<models::Network> g_a;  // processed -> raw
  std::unique_ptr<models::Network> g_b;  // raw -> processed
  std::unique_ptr<models::Network> d_a;  // judges raw-domain images
  std::unique_ptr<models::Network> d_b;  // judges processed-domain images
  NetOptimizer opt_g_a, opt_g_b, opt_d_a, opt_d_b;
  std::int64_t step = 0;
  /// Consecutive saturated generator-loss steps per direction.
  std::int64_t saturated_a = 0;
  std::int64_t saturated_b = 0;
  TrainingHistory history;
};

/// `generator` seeds both generators (g_b with `seed`, g_a with `seed + 1`); likewise the discriminators.
CycleGanState init_cyclegan(const nlohmann::json& generator_config, const nlohmann::json& discriminator_config,
                            const TrainingConfig& config);
/// Per step: D_a, D_b updates on pre-update fakes, then a joint generator update.
/// Throws DivergenceError when a generator loss stays saturated for divergence_window steps.
void train_blackbox(CycleGanState& state, const UnpairedSamples& data, const TrainingConfig& config,
                    const StepCallback& after_step = {});

struct BlackboxStepLosses {
  double d_a = 0.0, d_b = 0.0;
  double adv_a = 0.0, adv_b = 0.0;
  double cycle_a = 0.0, cycle_b = 0.0;
  std::int64_t clamped = 0;
  bool saturated_a = false, saturated_b = false;
};

struct BlackboxStepOptions {
  /// false freezes both discriminators (no update, running stats untouched).
  bool update_discriminators = true;
  /// Overrides of the config weights; zero is allowed here.
  std::optional<double> cycle_weight;
  std::optional<double> adversarial_weight;
  /// Called after each of "d_a", "d_b" and "generators".
  std::function<void(std::string_view phase)> after_phase;
  std::string batch_ids;
};

/// One black-box update on batches `a` (raw domain) and `b` (processed domain).
/// Does not advance state.step or touch the history.
BlackboxStepLosses blackbox_step(CycleGanState& state, const nn::Tensor& a, const nn::Tensor& b,
                                 const TrainingConfig& config, const BlackboxStepOptions& options = {});

/// Checkpoint records. `extra` lands under config["experiment"].
models::Archive graybox_archive(const GrayboxState& state, const TrainingConfig& config,
                                const nlohmann::json& extra = nlohmann::json::object());
models::Archive cyclegan_archive(const CycleGanState& state, const TrainingConfig& config,
                                 const nlohmann::json& extra = nlohmann::json::object());
GrayboxState graybox_from_archive(const models::Archive& archive);
CycleGanState cyclegan_from_archive(const models::Archive& archive);
TrainingConfig config_from_archive(const models::Archive& archive);

/// The network used at inference time: the gray-box generator or the black-box G_b.
std::unique_ptr<models::Network> inference_model(const models::Archive& archive);

}  // namespace postmimic::training
