#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "postmimic/cli/experiment.hpp"
#include "postmimic/data/synth.hpp"
#include "postmimic/errors.hpp"
#include "postmimic/evaluation/evaluate.hpp"
#include "postmimic/metrics.hpp"
#include "postmimic/models/network.hpp"

namespace py = pybind11;
using namespace postmimic;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 2) throw ContractError("expected a 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Image(h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Image& img) {
  Array out({img.height(), img.width()});
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

nlohmann::json parse(const std::string& text) { return nlohmann::json::parse(text); }

struct Model {
  std::shared_ptr<models::Network> net;
  std::int64_t step = 0;
};

Model wrap(cli::LoadedModel m) { return {std::shared_ptr<models::Network>(std::move(m.model)), m.step}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Image post-processing mimics for ultrasound cineloops";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);

  m.def("mse", [](const Array& x, const Array& y) { return metrics::mse(to_image(x), to_image(y)); });
  m.def("mae", [](const Array& x, const Array& y) { return metrics::mae(to_image(x), to_image(y)); });
  m.def("psnr", [](const Array& x, const Array& y, double max_intensity) {
    return metrics::psnr(to_image(x), to_image(y), max_intensity);
  }, py::arg("x"), py::arg("y"), py::arg("max_intensity") = 1.0);
  m.def("ssim", [](const Array& x, const Array& y, double dynamic_range) {
    const auto r = metrics::ssim(to_image(x), to_image(y), metrics::SsimParams::gaussian(dynamic_range));
    return py::dict(py::arg("ssim") = r.mean_ssim, py::arg("l") = r.mean_l, py::arg("cs") = r.mean_cs);
  }, py::arg("x"), py::arg("y"), py::arg("dynamic_range") = 1.0);

  m.def("synth_cineloop", [](const std::string& spec_json) {
    const data::Cineloop loop = data::synth_cineloop(data::PhantomSpec::from_json(parse(spec_json)), "loop");
    py::list frames;
    for (const auto& f : loop.frames) frames.append(to_array(f.values));
    return frames;
  }, py::arg("spec_json"), "Log-compressed frames in dB");
  m.def("oracle_postprocess", [](const Array& db) {
    return to_array(data::oracle_postprocess(data::Frame(to_image(db), data::ValueDomain::decibels())).values);
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& s) { return s.net->kind(); })
      .def_property_readonly("step", [](const Model& s) { return s.step; })
      .def_property_readonly("parameter_count", [](const Model& s) { return models::count_params(*s.net); })
      .def_property_readonly("parameter_hash", [](const Model& s) { return models::parameter_hash(*s.net); })
      .def("flops", [](const Model& s, int h, int w) { return models::estimate_flops(*s.net, {1, 1, h, w}).flops; })
      .def("run_frame", [](const Model& s, const Array& x) { return to_array(evaluation::run_frame(*s.net, to_image(x))); })
      .def("benchmark", [](const Model& s, int h, int w, int reps) {
        return evaluation::benchmark_inference(*s.net, {h, w}, reps).to_json().dump();
      }, py::arg("height"), py::arg("width"), py::arg("repetitions") = 10);

  m.def("preset", [](const std::string& name, std::uint64_t seed) { return wrap(cli::preset_model(name, seed)); },
        py::arg("name"), py::arg("seed") = 0);
  m.def("load_checkpoint", [](const std::string& path) { return wrap(cli::load_model(path)); });
}
