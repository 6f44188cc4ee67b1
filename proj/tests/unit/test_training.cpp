#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "postmimic/data/synth.hpp"
#include "postmimic/metrics.hpp"
#include "postmimic/models/archive.hpp"
#include "postmimic/models/discriminator.hpp"
#include "postmimic/models/generator.hpp"
#include "postmimic/models/simple.hpp"
#include "postmimic/training/losses.hpp"
#include "postmimic/training/trainer.hpp"
#include "checks.hpp"
#include "support.hpp"

using namespace postmimic;
using namespace postmimic::training;
using models::Network;
using models::Param;
using models::ParamKind;
using nn::Shape;
using nn::Tensor;

namespace {

nlohmann::json tiny_unet() { return {{"kind", "unet"}, {"levels", 1}, {"channels_per_level", {8}}}; }
nlohmann::json small_unet() { return {{"kind", "unet"}, {"levels", 2}, {"channels_per_level", {4, 8}}}; }
nlohmann::json tiny_disc() { return {{"kind", "patch_discriminator"}, {"strided_blocks", 2}, {"base_channels", 4}}; }

// Smooth speckle-like frames in [0, 1].
data::Corpus corpus(int loops, int side, std::uint64_t seed) {
  data::CorpusRecipe r;
  r.phantom.extent = {side, side};
  r.phantom.frame_count = 2;
  r.random_lesions = 1;
  r.lesion_radius_min = 3.0;
  r.lesion_radius_max = 6.0;
  return data::make_synthetic_corpus(r, loops, seed);
}

std::vector<PairedSample> identity_pairs(int loops, int side, std::uint64_t seed) {
  const data::Corpus c = corpus(loops, side, seed);
  std::vector<PairedSample> out = paired_samples(c, c.ids());
  for (PairedSample& s : out) s.target = s.input;
  return out;
}

TrainingConfig base_config(Regime regime, std::int64_t steps) {
  TrainingConfig c;
  c.regime = regime;
  c.steps = steps;
  c.batch_size = 2;
  c.crop = {16, 16};
  c.seed = 11;
  c.deterministic = true;
  return c;
}

std::uint64_t trainable_hash(const Network& net) {
  std::uint64_t h = models::fnv1a(nullptr, 0);
  for (const Param* p : net.params())
    if (p->kind == ParamKind::kTrainable) h = models::fnv1a(p->value.data(), p->value.size() * sizeof(float), h);
  return h;
}

double tail_mean(const TrainingHistory& h, std::size_t column, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = h.rows.size() - n; i < h.rows.size(); ++i) s += h.rows[i].losses[column];
  return s / static_cast<double>(n);
}

Tensor batch_of(const std::vector<data::Frame>& frames, int side) {
  Tensor t({static_cast<int>(frames.size()), 1, side, side});
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const Image u = data::to_unit_range(frames[n]);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) t.at(static_cast<int>(n), 0, y, x) = static_cast<float>(u.at(y, x));
  }
  return t;
}

UnpairedSamples unpaired(const data::Corpus& c, std::uint64_t seed) {
  data::SplitManifest m;
  m.train_ids = c.ids();
  std::tie(m.raw_only_ids, m.processed_only_ids) = data::make_unpaired_groups(m.train_ids, seed);
  return unpaired_samples(c, m);
}

}  // namespace

TEST(Losses, LeastSquaresExamples) {
  const std::vector<double> ones(6, 1.0), zeros(6, 0.0), halves(6, 0.5);
  EXPECT_EQ(lsgan_discriminator_loss(ones, zeros), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_discriminator_loss(halves, halves), 0.25);
  EXPECT_EQ(lsgan_generator_loss(ones), 0.0);
  EXPECT_EQ(lsgan_generator_loss(zeros), 1.0);
}

TEST(Losses, LeastSquaresMatchLoopOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image r = testing_support::random_image(4, 5, s, -2, 2), f = testing_support::random_image(3, 3, s + 9, -2, 2);
    double lr = 0, lf = 0, lg = 0;
    for (double v : r.values()) lr += (v - 1) * (v - 1);
    for (double v : f.values()) {
      lf += v * v;
      lg += (v - 1) * (v - 1);
    }
    EXPECT_NEAR(lsgan_discriminator_loss(r.values(), f.values()), 0.5 * lr / 20 + 0.5 * lf / 9, 1e-9);
    EXPECT_NEAR(lsgan_generator_loss(f.values()), lg / 9, 1e-9);
  }
}

TEST(Losses, LogisticExamples) {
  const std::vector<double> zero(4, 0.0);
  EXPECT_NEAR(logistic_generator_loss(zero).value, std::log(2.0), 1e-12);
  const std::vector<double> confident_real(4, 20.0), confident_fake(4, -20.0);
  const LogisticLoss d = logistic_discriminator_loss(confident_real, confident_fake);
  EXPECT_LT(d.value, 1e-6);
  EXPECT_EQ(d.clamped, 0);
  const LogisticLoss g = logistic_generator_loss(std::vector<double>(3, -40.0));
  EXPECT_EQ(g.clamped, 3);
  EXPECT_NEAR(g.value, -std::log(kLogFloor), 1e-9);
}

TEST(Losses, AdversarialGradientsMatchFiniteDifferences) {
  for (const char* name : {"lsgan_discriminator", "lsgan_generator", "logistic_discriminator", "logistic_generator"})
    for (std::uint64_t s = 0; s < 10; ++s) EXPECT_LT(pmchecks::gradient_check(name, s), 1e-3) << name << " " << s;
}

TEST(Losses, CycleLossExamples) {
  const Image x = testing_support::random_image(16, 16, 3);
  for (Distance f : {Distance::kMse, Distance::kMae, Distance::kSsim}) EXPECT_NEAR(cycle_loss(x, x, f), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(cycle_loss(Image(1, 2, {0.0, 0.5}), Image(1, 2, {0.5, 1.0}), Distance::kMae), 0.5);
  const Image y = testing_support::random_image(16, 16, 4);
  EXPECT_NEAR(cycle_loss(x, y, Distance::kSsim), 1.0 - metrics::ssim(x, y, training_ssim_params()).mean_ssim, 1e-12);
  EXPECT_THROW(cycle_loss(x, Image(16, 15), Distance::kMse), ContractError);
}

TEST(Losses, NamesRoundTrip) {
  for (Distance f : {Distance::kMse, Distance::kMae, Distance::kSsim})
    EXPECT_EQ(distance_from_string(to_string(f)), f);
  EXPECT_EQ(loss_column(Distance::kSsim), "1-ssim");
  EXPECT_THROW(distance_from_string("psnr"), ContractError);
  EXPECT_EQ(adversarial_from_string(to_string(AdversarialKind::kLogistic)), AdversarialKind::kLogistic);
}

TEST(Config, ValidationListsEveryProblem) {
  TrainingConfig c;
  c.batch_size = 0;
  c.steps = -1;
  try {
    c.validate();
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("steps"), std::string::npos);
  }
  EXPECT_THROW(TrainingConfig::from_json({{"stepz", 3}}), ContractError);
  const TrainingConfig d = TrainingConfig::from_json(base_config(Regime::kBlackbox, 7).to_json());
  EXPECT_EQ(d.to_json(), base_config(Regime::kBlackbox, 7).to_json());
}

TEST(Graybox, IdentityTaskConverges) {
  TrainingConfig c = base_config(Regime::kGraybox, 200);
  c.distance = Distance::kMae;
  c.batch_size = 4;
  c.crop = {32, 32};
  c.generator_optimizer.learning_rate = 1e-2;
  c.generator_optimizer.beta1 = 0.9;
  GrayboxState s = init_graybox(models::make_network(tiny_unet(), 1), c);
  train_graybox(s, identity_pairs(2, 32, 2), c);
  ASSERT_EQ(s.history.rows.size(), 200u);
  EXPECT_GT(s.history.rows.front().losses[0], 0.5);
  EXPECT_LT(tail_mean(s.history, 0, 10), 0.02);
}

TEST(Graybox, ConstantTargetConverges) {
  TrainingConfig c = base_config(Regime::kGraybox, 200);
  c.distance = Distance::kMse;
  c.batch_size = 4;
  c.crop = {32, 32};
  c.generator_optimizer.learning_rate = 1e-2;
  c.generator_optimizer.beta1 = 0.9;
  std::vector<PairedSample> pairs = identity_pairs(2, 32, 3);
  for (PairedSample& p : pairs) p.target = Image(p.input.height(), p.input.width(), 0.5);
  GrayboxState s = init_graybox(models::make_network(tiny_unet(), 2), c);
  train_graybox(s, pairs, c);
  std::vector<data::Frame> frames;
  for (const PairedSample& p : pairs) frames.emplace_back(p.input, data::ValueDomain::normalized());
  // batch statistics, as during training
  const Tensor y = s.generator->forward(batch_of(frames, 32), models::Phase::kTrainFrozenStats);
  const double mean = std::accumulate(y.data().begin(), y.data().end(), 0.0) / static_cast<double>(y.size());
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(Graybox, ZeroStepsKeepsInitialization) {
  const TrainingConfig c = base_config(Regime::kGraybox, 0);
  GrayboxState s = init_graybox(models::make_network(small_unet(), 4), c);
  const std::uint64_t before = models::parameter_hash(*s.generator);
  train_graybox(s, identity_pairs(2, 32, 1), c);
  EXPECT_EQ(models::parameter_hash(*s.generator), before);
  EXPECT_EQ(models::parameter_hash(*models::make_network(small_unet(), 4)), before);
  EXPECT_TRUE(s.history.rows.empty());
}

TEST(Graybox, NonFiniteLossNamesStepAndBatch) {
  TrainingConfig c = base_config(Regime::kGraybox, 3);
  std::vector<PairedSample> pairs = identity_pairs(2, 16, 1);
  for (PairedSample& p : pairs) p.target[5] = std::nan("");
  GrayboxState s = init_graybox(models::make_network(tiny_unet(), 1), c);
  try {
    train_graybox(s, pairs, c);
    FAIL();
  } catch (const NonFiniteError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("step 0"), std::string::npos) << m;
    EXPECT_NE(m.find("#"), std::string::npos) << m;
  }
}

TEST(Graybox, HistoryColumnsAndCsv) {
  TrainingConfig c = base_config(Regime::kGraybox, 3);
  c.distance = Distance::kSsim;
  GrayboxState s = init_graybox(models::make_network(tiny_unet(), 1), c);
  train_graybox(s, identity_pairs(2, 16, 1), c);
  const std::string csv = s.history.csv(true);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,1-ssim,wall_clock");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(TrainingHistory::from_json(s.history.to_json()).csv(false), s.history.csv(false));
}

TEST(Graybox, DeterministicAndResumable) {
  TrainingConfig c = base_config(Regime::kGraybox, 12);
  const auto pairs = identity_pairs(3, 32, 5);
  GrayboxState full = init_graybox(models::make_network(small_unet(), 3), c);
  train_graybox(full, pairs, c);
  GrayboxState again = init_graybox(models::make_network(small_unet(), 3), c);
  train_graybox(again, pairs, c);
  EXPECT_EQ(again.history.csv(false), full.history.csv(false));
  EXPECT_EQ(models::parameter_hash(*again.generator), models::parameter_hash(*full.generator));

  TrainingConfig first = c;
  first.steps = 5;
  GrayboxState part = init_graybox(models::make_network(small_unet(), 3), first);
  train_graybox(part, pairs, first);
  const std::string bytes = models::encode_archive(graybox_archive(part, first));
  GrayboxState resumed = graybox_from_archive(models::decode_archive(bytes));
  EXPECT_EQ(resumed.step, 5);
  train_graybox(resumed, pairs, c);
  EXPECT_EQ(models::parameter_hash(*resumed.generator), models::parameter_hash(*full.generator));
  EXPECT_EQ(resumed.history.csv(false), full.history.csv(false));
}

TEST(Graybox, CheckpointSaveLoadSaveIsByteIdentical) {
  TrainingConfig c = base_config(Regime::kGraybox, 4);
  GrayboxState s = init_graybox(models::make_network(small_unet(), 3), c);
  train_graybox(s, identity_pairs(2, 32, 5), c);
  const std::string a = models::encode_archive(graybox_archive(s, c));
  const models::Archive loaded = models::decode_archive(a);
  const GrayboxState back = graybox_from_archive(loaded);
  EXPECT_EQ(models::encode_archive(graybox_archive(back, config_from_archive(loaded))), a);
}

TEST(Blackbox, ZeroStepsKeepsBothGenerators) {
  const TrainingConfig c = base_config(Regime::kBlackbox, 0);
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  const std::uint64_t ga = models::parameter_hash(*s.g_a), gb = models::parameter_hash(*s.g_b);
  train_blackbox(s, unpaired(corpus(4, 32, 1), 2), c);
  EXPECT_EQ(models::parameter_hash(*s.g_a), ga);
  EXPECT_EQ(models::parameter_hash(*s.g_b), gb);
  EXPECT_EQ(models::parameter_hash(*models::make_network(small_unet(), c.seed)), gb);
}

TEST(Blackbox, UpdateIsolationPerPhase) {
  const TrainingConfig c = base_config(Regime::kBlackbox, 1);
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  const data::Corpus cp = corpus(2, 16, 3);
  const Tensor a = batch_of(cp.loops[0].frames, 16), b = batch_of(cp.loops[1].frames, 16);
  std::uint64_t da = models::parameter_hash(*s.d_a), db = models::parameter_hash(*s.d_b);
  std::vector<std::string> phases;
  BlackboxStepOptions o;
  o.after_phase = [&](std::string_view phase) {
    phases.emplace_back(phase);
    const std::uint64_t na = models::parameter_hash(*s.d_a), nb = models::parameter_hash(*s.d_b);
    if (phase == "d_a") {
      EXPECT_NE(na, da);
      EXPECT_EQ(nb, db) << "updating D_a touched D_b";
    } else if (phase == "d_b") {
      EXPECT_EQ(na, da) << "updating D_b touched D_a";
      EXPECT_NE(nb, db);
    } else {
      EXPECT_EQ(na, da) << "generator phase touched D_a";
      EXPECT_EQ(nb, db) << "generator phase touched D_b";
    }
    da = na;
    db = nb;
  };
  const std::uint64_t ga = trainable_hash(*s.g_a), gb = trainable_hash(*s.g_b);
  blackbox_step(s, a, b, c, o);
  EXPECT_EQ(phases, (std::vector<std::string>{"d_a", "d_b", "generators"}));
  EXPECT_NE(trainable_hash(*s.g_a), ga);
  EXPECT_NE(trainable_hash(*s.g_b), gb);
  EXPECT_EQ(s.step, 0);
}

TEST(Blackbox, AdversarialTermAloneMovesGenerators) {
  const TrainingConfig c = base_config(Regime::kBlackbox, 1);
  const data::Corpus cp = corpus(2, 16, 4);
  const Tensor a = batch_of(cp.loops[0].frames, 16), b = batch_of(cp.loops[1].frames, 16);

  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  const std::uint64_t d0 = models::parameter_hash(*s.d_a) ^ models::parameter_hash(*s.d_b);
  BlackboxStepOptions frozen;
  frozen.update_discriminators = false;
  frozen.cycle_weight = 0.0;
  const std::uint64_t ga = trainable_hash(*s.g_a), gb = trainable_hash(*s.g_b);
  blackbox_step(s, a, b, c, frozen);
  EXPECT_NE(trainable_hash(*s.g_a), ga);
  EXPECT_NE(trainable_hash(*s.g_b), gb);
  EXPECT_EQ(models::parameter_hash(*s.d_a) ^ models::parameter_hash(*s.d_b), d0);

  CycleGanState t = init_cyclegan(small_unet(), tiny_disc(), c);
  frozen.adversarial_weight = 0.0;
  const std::uint64_t ta = trainable_hash(*t.g_a), tb = trainable_hash(*t.g_b);
  blackbox_step(t, a, b, c, frozen);
  EXPECT_EQ(trainable_hash(*t.g_a), ta);
  EXPECT_EQ(trainable_hash(*t.g_b), tb);
}

TEST(Blackbox, StrongCycleWeightLearnsInvertibleMap) {
  TrainingConfig c = base_config(Regime::kBlackbox, 600);
  c.cycle_weight = 100.0;
  c.adversarial_weight = 0.0;
  c.distance = Distance::kMae;
  c.batch_size = 4;
  c.crop = {32, 32};
  c.generator_optimizer.learning_rate = 3e-3;
  c.generator_optimizer.beta1 = 0.9;
  CycleGanState s = init_cyclegan(tiny_unet(), tiny_disc(), c);
  train_blackbox(s, unpaired(corpus(16, 32, 7), 1), c);
  // batch statistics: running stats of a short run are still near their initial values
  const data::Corpus held = corpus(2, 32, 99);
  const Tensor x = batch_of(held.loops[0].frames, 32);
  const Tensor rec = s.g_a->forward(s.g_b->forward(x, models::Phase::kTrainFrozenStats), models::Phase::kTrainFrozenStats);
  double mae = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mae += std::abs(rec[i] - x[i]);
  EXPECT_LT(mae / static_cast<double>(x.size()), 0.05);
}

TEST(Blackbox, DeterministicHistoryAndResume) {
  const TrainingConfig c = base_config(Regime::kBlackbox, 6);
  const UnpairedSamples d = unpaired(corpus(4, 16, 5), 3);
  CycleGanState x = init_cyclegan(small_unet(), tiny_disc(), c);
  train_blackbox(x, d, c);
  CycleGanState y = init_cyclegan(small_unet(), tiny_disc(), c);
  train_blackbox(y, d, c);
  EXPECT_EQ(x.history.csv(false), y.history.csv(false));
  EXPECT_EQ(x.history.columns, (std::vector<std::string>{"d_a", "d_b", "adv_a", "adv_b", "cycle_a", "cycle_b"}));

  TrainingConfig first = c;
  first.steps = 2;
  CycleGanState p = init_cyclegan(small_unet(), tiny_disc(), first);
  train_blackbox(p, d, first);
  CycleGanState r = cyclegan_from_archive(models::decode_archive(models::encode_archive(cyclegan_archive(p, first))));
  train_blackbox(r, d, c);
  for (auto [u, v] : {std::pair{r.g_a.get(), x.g_a.get()}, {r.g_b.get(), x.g_b.get()}, {r.d_a.get(), x.d_a.get()},
                      {r.d_b.get(), x.d_b.get()}})
    EXPECT_EQ(models::parameter_hash(*u), models::parameter_hash(*v));
  EXPECT_EQ(r.history.csv(false), x.history.csv(false));
}

TEST(Blackbox, LogisticHistoryRecordsClamps) {
  TrainingConfig c = base_config(Regime::kBlackbox, 2);
  c.adversarial = AdversarialKind::kLogistic;
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  train_blackbox(s, unpaired(corpus(4, 16, 5), 3), c);
  EXPECT_EQ(s.history.columns.back(), "log_clamps");
}

TEST(Blackbox, DivergenceDetectorAborts) {
  TrainingConfig c = base_config(Regime::kBlackbox, 50);
  c.divergence_window = 3;
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  // a discriminator that scores everything far below zero saturates the generator loss
  for (Network* d : {s.d_a.get(), s.d_b.get()})
    for (Param* p : d->params()) {
      if (p->kind != ParamKind::kTrainable) continue;
      std::fill(p->value.begin(), p->value.end(), 0.0f);
      if (p->name == "head.bias") p->value[0] = -50.0f;
    }
  try {
    train_blackbox(s, unpaired(corpus(4, 16, 6), 2), c);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("saturated"), std::string::npos) << e.what();
    EXPECT_EQ(s.step, 3);
  }
}

TEST(Blackbox, RequiresBothGroups) {
  const TrainingConfig c = base_config(Regime::kBlackbox, 2);
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  UnpairedSamples d = unpaired(corpus(4, 16, 6), 2);
  d.processed.clear();
  EXPECT_THROW(train_blackbox(s, d, c), ContractError);
}

TEST(Blackbox, CropMustSuitDiscriminator) {
  TrainingConfig c = base_config(Regime::kBlackbox, 2);
  c.crop = {18, 16};
  CycleGanState s = init_cyclegan(small_unet(), tiny_disc(), c);
  EXPECT_THROW(train_blackbox(s, unpaired(corpus(4, 32, 6), 2), c), ContractError);
}

TEST(Batches, PlanIsPureFunctionOfSeedStreamStep) {
  const TrainingConfig c = base_config(Regime::kGraybox, 1);
  const std::vector<Extent> ex(5, Extent{40, 30});
  const BatchPlan a = plan_batch(5, ex, c, kRawStream, 7), b = plan_batch(5, ex, c, kRawStream, 7);
  EXPECT_EQ(a.indices, b.indices);
  ASSERT_EQ(a.windows.size(), 2u);
  EXPECT_EQ(a.windows[0].offset_y, b.windows[0].offset_y);
  const BatchPlan other = plan_batch(5, ex, c, kProcessedStream, 7);
  bool differs = other.indices != a.indices;
  for (std::size_t i = 0; i < a.windows.size(); ++i)
    differs = differs || other.windows[i].offset_x != a.windows[i].offset_x;
  EXPECT_TRUE(differs);
}

TEST(Samples, UnpairedGroupsFeedSeparateStreams) {
  const data::Corpus c = corpus(6, 16, 8);
  data::SplitManifest m = data::split_by_cineloop(c.ids(), 0.34, 1);
  std::tie(m.raw_only_ids, m.processed_only_ids) = data::make_unpaired_groups(m.train_ids, 1);
  const UnpairedSamples u = unpaired_samples(c, m);
  std::set<std::string> raw_loops;
  for (const FrameSample& s : u.raw) raw_loops.insert(s.frame_id.substr(0, s.frame_id.find('#')));
  for (const FrameSample& s : u.processed) {
    const std::string loop = s.frame_id.substr(0, s.frame_id.find('#'));
    EXPECT_EQ(raw_loops.count(loop), 0u);
    EXPECT_TRUE(m.is_train(loop));
  }
  for (const std::string& loop : raw_loops) EXPECT_TRUE(m.is_train(loop));
}
