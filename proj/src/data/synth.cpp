#include "postmimic/data/synth.hpp"

#include <algorithm>
#include <set>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>

namespace postmimic::data {
namespace {

using Field = std::vector<std::complex<double>>;

std::vector<double> gaussian_taps(double sigma, double shift) {
  const int half = static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (int i = -half; i <= half; ++i) {
    const double d = i - shift;
    taps[static_cast<std::size_t>(i + half)] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return taps;
}

// Separable PSF normalized to unit energy so the speckle variance is preserved.
Field blur(const Field& white, Extent e, double shift_y, double shift_x) {
  std::vector<double> ty = gaussian_taps(kPsfAxialSigma, shift_y);
  std::vector<double> tx = gaussian_taps(kPsfLateralSigma, shift_x);
  double ey = 0.0, ex = 0.0;
  for (const double t : ty) ey += t * t;
  for (const double t : tx) ex += t * t;
  for (double& t : ty) t /= std::sqrt(ey);
  for (double& t : tx) t /= std::sqrt(ex);
  const int hy = static_cast<int>(ty.size() / 2);
  const int hx = static_cast<int>(tx.size() / 2);
  // Circular boundary keeps the field stationary up to the edges.
  Field rows(white.size());
  for (int y = 0; y < e.height; ++y)
    for (int x = 0; x < e.width; ++x) {
      std::complex<double> acc;
      for (int j = -hx; j <= hx; ++j) {
        const int sx = ((x + j) % e.width + e.width) % e.width;
        acc += tx[static_cast<std::size_t>(j + hx)] * white[static_cast<std::size_t>(y) * e.width + sx];
      }
      rows[static_cast<std::size_t>(y) * e.width + x] = acc;
    }
  Field out(white.size());
  for (int y = 0; y < e.height; ++y)
    for (int x = 0; x < e.width; ++x) {
      std::complex<double> acc;
      for (int i = -hy; i <= hy; ++i) {
        const int sy = ((y + i) % e.height + e.height) % e.height;
        acc += ty[static_cast<std::size_t>(i + hy)] * rows[static_cast<std::size_t>(sy) * e.width + x];
      }
      out[static_cast<std::size_t>(y) * e.width + x] = acc;
    }
  return out;
}

std::complex<double> draw_scatterer(Rng& rng, double density) {
  if (density < 1.0 && rng.uniform() >= density) return {};
  // Unit expected power per occupied cell.
  return {rng.normal() * std::sqrt(0.5), rng.normal() * std::sqrt(0.5)};
}

}  // namespace

void PhantomSpec::validate() const {
  std::vector<std::string> problems;
  if (extent.height < 2 || extent.width < 2) problems.push_back("extent must be at least 2x2, got " + extent.str());
  if (!(speckle_density > 0.0 && speckle_density <= 1.0)) problems.push_back("speckle_density must lie in (0, 1]");
  if (frame_count < 1) problems.push_back("frame_count must be >= 1");
  if (!(jitter_fraction >= 0.0 && jitter_fraction <= 1.0)) problems.push_back("jitter_fraction must lie in [0, 1]");
  if (!(drift_px >= 0.0 && drift_px < 1.0)) problems.push_back("drift_px must lie in [0, 1)");
  if (!std::isfinite(gain_slope_db_per_px)) problems.push_back("gain_slope_db_per_px must be finite");
  for (std::size_t i = 0; i < lesions.size(); ++i) {
    const Lesion& l = lesions[i];
    const std::string tag = "lesion " + std::to_string(i) + ": ";
    if (l.contrast_db < -30.0 || l.contrast_db > 30.0) problems.push_back(tag + "contrast must lie in [-30, 30] dB");
    if (!(l.radius > 0.0)) problems.push_back(tag + "radius must be positive");
    if (l.center_y - l.radius < 0.0 || l.center_y + l.radius > extent.height || l.center_x - l.radius < 0.0 ||
        l.center_x + l.radius > extent.width) {
      problems.push_back(tag + "must lie within the extent");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid phantom spec:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ContractError(msg);
  }
}

nlohmann::json PhantomSpec::to_json() const {
  nlohmann::json ls = nlohmann::json::array();
  for (const Lesion& l : lesions) {
    ls.push_back({{"center", {l.center_y, l.center_x}}, {"radius", l.radius}, {"contrast_db", l.contrast_db}});
  }
  return {{"extent", {extent.height, extent.width}},
          {"lesions", ls},
          {"speckle_density", speckle_density},
          {"gain_slope_db_per_px", gain_slope_db_per_px},
          {"seed", seed},
          {"frame_count", frame_count},
          {"jitter_fraction", jitter_fraction},
          {"drift_px", drift_px}};
}

PhantomSpec PhantomSpec::from_json(const nlohmann::json& j) {
  PhantomSpec s;
  if (j.contains("extent")) {
    const auto e = j.at("extent").get<std::vector<int>>();
    if (e.size() != 2) throw ContractError("phantom spec: extent must be [height, width]");
    s.extent = {e[0], e[1]};
  }
  for (const auto& l : j.value("lesions", nlohmann::json::array())) {
    const auto c = l.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw ContractError("phantom spec: lesion center must be [y, x]");
    s.lesions.push_back({c[0], c[1], l.at("radius").get<double>(), l.at("contrast_db").get<double>()});
  }
  s.speckle_density = j.value("speckle_density", s.speckle_density);
  s.gain_slope_db_per_px = j.value("gain_slope_db_per_px", s.gain_slope_db_per_px);
  s.seed = j.value("seed", s.seed);
  s.frame_count = j.value("frame_count", s.frame_count);
  s.jitter_fraction = j.value("jitter_fraction", s.jitter_fraction);
  s.drift_px = j.value("drift_px", s.drift_px);
  s.validate();
  return s;
}

std::vector<Image> synth_envelopes(const PhantomSpec& spec) {
  spec.validate();
  const Extent e = spec.extent;
  Rng rng({spec.seed, 0x5eedULL});
  Field white(e.count());
  for (auto& s : white) s = draw_scatterer(rng, spec.speckle_density);

  // Per-pixel amplitude gain from lesions and depth.
  Image gain(e.height, e.width, 1.0);
  for (int y = 0; y < e.height; ++y) {
    for (int x = 0; x < e.width; ++x) {
      double db = spec.gain_slope_db_per_px * y;
      for (const Lesion& l : spec.lesions) {
        const double dy = y + 0.5 - l.center_y;
        const double dx = x + 0.5 - l.center_x;
        if (dy * dy + dx * dx <= l.radius * l.radius) db += l.contrast_db;
      }
      gain.at(y, x) = std::pow(10.0, db / 20.0);
    }
  }

  std::vector<Image> envelopes;
  double drift_y = 0.0, drift_x = 0.0;
  const auto reseed_count = static_cast<std::size_t>(std::llround(spec.jitter_fraction * static_cast<double>(e.count())));
  for (int f = 0; f < spec.frame_count; ++f) {
    if (f > 0) {
      for (std::size_t k = 0; k < reseed_count; ++k) white[rng.below(white.size())] = draw_scatterer(rng, spec.speckle_density);
      drift_y = std::clamp(drift_y + rng.uniform(-spec.drift_px, spec.drift_px), -0.5, 0.5);
      drift_x = std::clamp(drift_x + rng.uniform(-spec.drift_px, spec.drift_px), -0.5, 0.5);
    }
    const Field field = blur(white, e, drift_y, drift_x);
    Image env(e.height, e.width);
    for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::abs(field[i]) * gain[i];
    envelopes.push_back(std::move(env));
  }
  return envelopes;
}

Cineloop synth_cineloop(const PhantomSpec& spec, const std::string& id) {
  Cineloop loop;
  loop.id = id;
  loop.seed = spec.seed;
  for (const Image& env : synth_envelopes(spec)) {
    Frame f = log_compress(env);
    for (double& v : f.values.values()) v = std::clamp(static_cast<double>(static_cast<float>(v)), kRawFloorDb, 0.0);
    loop.frames.push_back(std::move(f));
  }
  return loop;
}

Frame log_compress(const Image& envelope, double floor_db) {
  if (envelope.empty()) throw ContractError("log_compress: empty envelope");
  if (!(floor_db < 0.0)) throw ContractError("log_compress: floor must be negative");
  for (const double v : envelope.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("log_compress: envelope must be finite and >= 0");
  }
  const double peak = envelope.max();
  if (peak <= 0.0) throw ContractError("log_compress: envelope is all zero");
  Image db(envelope.height(), envelope.width());
  for (std::size_t i = 0; i < db.size(); ++i) {
    db[i] = envelope[i] > 0.0 ? std::max(floor_db, 20.0 * std::log10(envelope[i] / peak)) : floor_db;
  }
  return Frame(std::move(db), ValueDomain::decibels(floor_db, 0.0));
}

Image median3x3(const Image& image) {
  const int h = image.height();
  const int w = image.width();
  Image out(h, w);
  std::array<double, 9> window{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int k = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) window[k++] = image.at(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out.at(y, x) = window[4];
    }
  }
  return out;
}

Frame oracle_postprocess(const Frame& raw) {
  if (raw.domain.kind != DomainKind::kDecibels) throw ContractError("oracle_postprocess: input must be in decibels");
  Image clipped = raw.values;
  for (double& v : clipped.values()) v = std::clamp(v, kOracleClipDb, 0.0);
  Image out = median3x3(clipped);
  for (double& v : out.values()) v = std::pow((v - kOracleClipDb) / -kOracleClipDb, kOracleGamma);
  Frame f(std::move(out), ValueDomain::normalized());
  f.original_extent = raw.original_extent;
  return f;
}

void CorpusRecipe::validate() const {
  std::vector<std::string> problems;
  try {
    phantom.validate();
  } catch (const ContractError& e) {
    problems.push_back(e.what());
  }
  if (random_lesions < 0) problems.push_back("random_lesions must be >= 0");
  if (!(lesion_radius_min > 0.0 && lesion_radius_min <= lesion_radius_max)) {
    problems.push_back("lesion radii must satisfy 0 < min <= max");
  }
  if (2.0 * lesion_radius_max >= std::min(phantom.extent.height, phantom.extent.width) && random_lesions > 0) {
    problems.push_back("lesion_radius_max does not fit in the extent");
  }
  if (!(contrast_min_db >= -30.0 && contrast_min_db <= contrast_max_db && contrast_max_db <= 30.0)) {
    problems.push_back("contrast range must satisfy -30 <= min <= max <= 30 dB");
  }
  if (!(gain_slope_min <= gain_slope_max) || !std::isfinite(gain_slope_min) || !std::isfinite(gain_slope_max)) {
    problems.push_back("gain slope range must satisfy min <= max");
  }
  if (!problems.empty()) {
    std::string msg = "invalid corpus recipe:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ContractError(msg);
  }
}

nlohmann::json CorpusRecipe::to_json() const {
  return {{"phantom", phantom.to_json()},
          {"random_lesions", random_lesions},
          {"lesion_radius", {lesion_radius_min, lesion_radius_max}},
          {"contrast_db", {contrast_min_db, contrast_max_db}},
          {"gain_slope_db_per_px", {gain_slope_min, gain_slope_max}},
          {"emit_processed", emit_processed}};
}

CorpusRecipe CorpusRecipe::from_json(const nlohmann::json& j) {
  CorpusRecipe r;
  static const std::set<std::string> known = {"phantom",     "random_lesions", "lesion_radius",
                                              "contrast_db", "gain_slope_db_per_px", "emit_processed"};
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string msg = "corpus recipe: unknown field(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ContractError(msg);
  }
  try {
    if (j.contains("phantom")) r.phantom = PhantomSpec::from_json(j.at("phantom"));
    r.random_lesions = j.value("random_lesions", r.random_lesions);
    const auto range = [&j](const char* key, double& lo, double& hi) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw ContractError(std::string(key) + " must be [min, max]");
      lo = v[0];
      hi = v[1];
    };
    range("lesion_radius", r.lesion_radius_min, r.lesion_radius_max);
    range("contrast_db", r.contrast_min_db, r.contrast_max_db);
    range("gain_slope_db_per_px", r.gain_slope_min, r.gain_slope_max);
    r.emit_processed = j.value("emit_processed", r.emit_processed);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("corpus recipe: ") + e.what());
  }
  r.validate();
  return r;
}

Corpus make_synthetic_corpus(const CorpusRecipe& recipe, int count, std::uint64_t seed) {
  recipe.validate();
  if (count < 0) throw ContractError("make_synthetic_corpus: count must be >= 0");
  Corpus corpus;
  for (int i = 0; i < count; ++i) {
    Rng rng({seed, static_cast<std::uint64_t>(i), 0xc0ULL});
    PhantomSpec spec = recipe.phantom;
    spec.seed = rng.next();
    spec.gain_slope_db_per_px = rng.uniform(recipe.gain_slope_min, recipe.gain_slope_max);
    spec.lesions = recipe.phantom.lesions;
    for (int k = 0; k < recipe.random_lesions; ++k) {
      Lesion l;
      l.radius = rng.uniform(recipe.lesion_radius_min, recipe.lesion_radius_max);
      l.center_y = rng.uniform(l.radius, spec.extent.height - l.radius);
      l.center_x = rng.uniform(l.radius, spec.extent.width - l.radius);
      l.contrast_db = rng.uniform(recipe.contrast_min_db, recipe.contrast_max_db);
      spec.lesions.push_back(l);
    }
    char id[32];
    std::snprintf(id, sizeof id, "loop%04d", i);
    Cineloop loop = synth_cineloop(spec, id);
    if (recipe.emit_processed) {
      Cineloop processed;
      processed.id = loop.id;
      processed.seed = loop.seed;
      for (const Frame& f : loop.frames) {
        Frame out = oracle_postprocess(f);
        for (double& v : out.values.values()) v = static_cast<float>(v);
        processed.frames.push_back(std::move(out));
      }
      corpus.processed.emplace(loop.id, std::move(processed));
    }
    corpus.loops.push_back(std::move(loop));
  }
  return corpus;
}

}  // namespace postmimic::data
