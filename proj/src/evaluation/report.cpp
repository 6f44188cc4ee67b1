#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "postmimic/data/frames.hpp"
#include "postmimic/errors.hpp"
#include "postmimic/evaluation/evaluate.hpp"
#include "postmimic/nn/tensor.hpp"
#include "postmimic/random.hpp"

namespace postmimic::evaluation {
namespace {

ComponentSummary summarize(const std::string& name, const std::vector<double>& values) {
  ComponentSummary s;
  s.name = name;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.stats = aggregate_values(values);
  s.histogram = histogram(values);
  s.kde = kernel_density(values);
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Histogram histogram(const std::vector<double>& values, int bins) {
  if (values.empty()) throw ContractError("histogram: no values");
  if (bins < 1) throw ContractError("histogram: bins must be >= 1");
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  Histogram h;
  if (!(hi > lo)) {
    h.edges = {lo, hi};
    h.counts = {values.size()};
    return h;
  }
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + (hi - lo) * i / bins);
  for (const double v : values) {
    auto b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * bins));
    h.counts[std::min(b, static_cast<std::size_t>(bins - 1))]++;
  }
  return h;
}

DensityEstimate kernel_density(const std::vector<double>& values, int grid) {
  if (values.empty()) throw ContractError("kernel_density: no values");
  if (grid < 2) throw ContractError("kernel_density: grid must have >= 2 points");
  DensityEstimate d;
  const Aggregate a = aggregate_values(values);
  const double n = static_cast<double>(values.size());
  d.bandwidth = a.std * std::pow(n, -0.2);
  if (!(d.bandwidth > 0.0)) {
    d.bandwidth = 0.0;
    return d;
  }
  const double lo = *std::min_element(values.begin(), values.end()) - 3.0 * d.bandwidth;
  const double hi = *std::max_element(values.begin(), values.end()) + 3.0 * d.bandwidth;
  const double norm = 1.0 / (n * d.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    double acc = 0.0;
    for (const double v : values) {
      const double z = (x - v) / d.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    d.grid.push_back(x);
    d.density.push_back(acc * norm);
  }
  return d;
}

ComponentDistribution component_distribution(const MetricsReport& report) {
  if (report.records.empty()) throw ContractError("component_distribution: empty report");
  std::vector<double> l, cs;
  for (const FrameRecord& r : report.records) {
    l.push_back(r.l);
    cs.push_back(r.cs);
  }
  return {summarize("l", l), summarize("cs", cs)};
}

std::string histogram_csv(const ComponentDistribution& d) {
  std::string out = "component,bin,lo,hi,count\n";
  for (const ComponentSummary* c : {&d.l, &d.cs}) {
    for (std::size_t b = 0; b < c->histogram.counts.size(); ++b) {
      out += c->name + "," + std::to_string(b) + "," + fmt(c->histogram.edges[b]) + "," +
             fmt(c->histogram.edges[b + 1]) + "," + std::to_string(c->histogram.counts[b]) + "\n";
    }
  }
  return out;
}

std::string density_csv(const ComponentDistribution& d) {
  std::string out = "component,x,density,bandwidth\n";
  for (const ComponentSummary* c : {&d.l, &d.cs}) {
    for (std::size_t i = 0; i < c->kde.grid.size(); ++i) {
      out += c->name + "," + fmt(c->kde.grid[i]) + "," + fmt(c->kde.density[i]) + "," + fmt(c->kde.bandwidth) + "\n";
    }
  }
  return out;
}

nlohmann::json BenchmarkResult::to_json() const {
  return {{"extent", {extent.height, extent.width}},
          {"padded_extent", {padded.height, padded.width}},
          {"repetitions", repetitions},
          {"warmups", kBenchmarkWarmups},
          {"median_seconds", median_seconds},
          {"fps", fps},
          {"parameter_count", parameter_count},
          {"multiply_accumulates", multiply_accumulates},
          {"flops", flops},
          {"mflops", static_cast<double>(flops) / 1e6}};
}

BenchmarkResult benchmark_inference(const models::Network& model, Extent extent, int repetitions) {
  if (repetitions < 10) throw ContractError("benchmark_inference: repetitions must be >= 10, got " + std::to_string(repetitions));
  if (extent.height < 1 || extent.width < 1) throw ContractError("benchmark_inference: empty extent");
  Rng rng(0);
  Image input(extent.height, extent.width);
  for (double& v : input.values()) v = rng.uniform();
  const data::PaddedImage padded = data::pad_to_multiple(input, std::max(16, model.spatial_divisor()));
  const Image* img = &padded.image;
  const nn::Tensor x = nn::stack_images({img, 1});

  for (int i = 0; i < kBenchmarkWarmups; ++i) (void)model.infer(x);
  std::vector<double> seconds;
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const nn::Tensor y = model.infer(x);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (y.size() == 0) throw ContractError("benchmark_inference: empty output");
  }
  std::sort(seconds.begin(), seconds.end());
  const std::size_t n = seconds.size();
  BenchmarkResult r;
  r.extent = extent;
  r.padded = padded.image.extent();
  r.repetitions = repetitions;
  r.median_seconds = n % 2 ? seconds[n / 2] : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
  r.fps = 1.0 / std::max(r.median_seconds, 1e-12);
  const models::ModelSummary s = models::estimate_flops(model, x.shape());
  r.parameter_count = s.parameter_count;
  r.multiply_accumulates = s.multiply_accumulates;
  r.flops = s.flops;
  return r;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::string bytes = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  for (const double v : image.values()) {
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  const auto skip_comments = [&in] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  in >> magic;
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  if (!in || magic != "P5" || w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw DataError(path.string() + ": not an 8-bit binary graymap");
  }
  in.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw DataError(path.string() + ": truncated pixel data");
  Image img(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) img[i] = static_cast<double>(raw[i]) / maxval;
  return img;
}

}  // namespace postmimic::evaluation
