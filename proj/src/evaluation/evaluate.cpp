#include "postmimic/evaluation/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "postmimic/errors.hpp"
#include "postmimic/metrics.hpp"
#include "postmimic/nn/tensor.hpp"

namespace postmimic::evaluation {
namespace {

nlohmann::json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}, {"count", a.count}}; }

nlohmann::json scaled_json(const Aggregate& a, double scale) { return {{"mean", a.mean * scale}, {"std", a.std * scale}}; }

void append_number(std::string& out, double v) {
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

Aggregate aggregate_values(const std::vector<double>& values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (const double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (const double v : values) sq += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(sq / static_cast<double>(values.size()));
  return a;
}

void MetricsReport::aggregate() {
  std::vector<double> v_mse, v_mae, v_psnr, v_ssim, v_l, v_cs;
  psnr_infinite = 0;
  for (const FrameRecord& r : records) {
    v_mse.push_back(r.mse);
    v_mae.push_back(r.mae);
    if (std::isinf(r.psnr)) {
      ++psnr_infinite;
    } else {
      v_psnr.push_back(r.psnr);
    }
    v_ssim.push_back(r.ssim);
    v_l.push_back(r.l);
    v_cs.push_back(r.cs);
  }
  mse = aggregate_values(v_mse);
  mae = aggregate_values(v_mae);
  psnr = aggregate_values(v_psnr);
  ssim = aggregate_values(v_ssim);
  l = aggregate_values(v_l);
  cs = aggregate_values(v_cs);
}

std::string MetricsReport::csv() const {
  std::string out = "frame_id,mse,mae,psnr,ssim,l,cs\n";
  for (const FrameRecord& r : records) {
    out += r.frame_id;
    for (const double v : {r.mse, r.mae, r.psnr, r.ssim, r.l, r.cs}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json MetricsReport::summary() const {
  return {{"frames", records.size()},
          {"mse", aggregate_json(mse)},
          {"mae", aggregate_json(mae)},
          {"psnr", aggregate_json(psnr)},
          {"psnr_infinite", psnr_infinite},
          {"ssim", aggregate_json(ssim)},
          {"l", aggregate_json(l)},
          {"cs", aggregate_json(cs)},
          {"table",
           {{"mse_1e-3", scaled_json(mse, 1e3)},
            {"mae_1e-2", scaled_json(mae, 1e2)},
            {"psnr", scaled_json(psnr, 1.0)},
            {"ssim", scaled_json(ssim, 1.0)}}}};
}

Image run_frame(const models::Network& model, const Image& input) {
  const data::PaddedImage padded = data::pad_to_multiple(input, std::max(16, model.spatial_divisor()));
  const Image* images = &padded.image;
  const nn::Tensor out = model.infer(nn::stack_images({images, 1}));
  Image result = data::crop_back(nn::plane_to_image(out, 0, 0), padded.crop_back);
  for (double& v : result.values()) v = std::clamp(v, 0.0, 1.0);
  return result;
}

MetricsReport evaluate_testset(const models::Network& model, const data::Corpus& corpus,
                               const data::SplitManifest& manifest, const std::vector<std::string>& loop_ids) {
  std::vector<std::string> leaked;
  for (const auto& id : loop_ids) {
    if (manifest.is_train(id)) leaked.push_back(id);
  }
  if (!leaked.empty()) {
    std::string msg = "refusing to evaluate training cineloops:";
    for (const auto& id : leaked) msg += " " + id;
    throw LeakageError(msg);
  }
  std::vector<std::string> ids = loop_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const metrics::SsimParams params = metrics::SsimParams::gaussian(1.0);
  MetricsReport report;
  for (const auto& id : ids) {
    const data::Cineloop& loop = corpus.loop(id);
    for (std::size_t i = 0; i < loop.frames.size(); ++i) {
      const Image input = data::to_unit_range(loop.frames[i]);
      const Image truth = data::to_unit_range(corpus.ground_truth(id, i));
      const Image out = run_frame(model, input);
      const metrics::SsimResult s = metrics::ssim(out, truth, params);
      FrameRecord r;
      r.frame_id = data::frame_id(id, i);
      r.mse = metrics::mse(out, truth);
      r.mae = metrics::mae(out, truth);
      r.psnr = metrics::psnr_from_mse(r.mse);
      r.ssim = s.mean_ssim;
      r.l = s.mean_l;
      r.cs = s.mean_cs;
      report.records.push_back(std::move(r));
    }
  }
  report.aggregate();
  return report;
}

std::vector<FrameRecord> worst_cases(const MetricsReport& report, std::size_t k) {
  if (k > report.records.size()) {
    throw ContractError("worst_cases: k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(report.records.size()) + " frames in the report");
  }
  std::vector<FrameRecord> sorted = report.records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const FrameRecord& a, const FrameRecord& b) {
    if (a.ssim != b.ssim) return a.ssim < b.ssim;
    return a.frame_id < b.frame_id;
  });
  sorted.resize(k);
  return sorted;
}

Image difference_image(const Image& a, const Image& b) {
  require_same_extent(a, b, "difference_image");
  Image d(a.height(), a.width());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  const double lo = d.min();
  const double hi = d.max();
  if (!(hi > lo)) return Image(a.height(), a.width(), 0.0);
  for (double& v : d.values()) v = (v - lo) / (hi - lo);
  return d;
}

}  // namespace postmimic::evaluation
