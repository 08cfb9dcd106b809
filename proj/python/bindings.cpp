#include <cstring>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relaxmap/experiment.hpp"
#include "relaxmap/io.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/recon.hpp"
#include "relaxmap/sampling.hpp"

namespace py = pybind11;
using namespace relaxmap;

namespace {

auto to_numpy(RealImage const &img) -> py::array_t<double>
{
  py::array_t<double> out({img.rows(), img.cols()});
  std::memcpy(out.mutable_data(), img.vec().data(), sizeof(double) * static_cast<std::size_t>(img.size()));
  return out;
}

auto from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> const &a) -> RealImage
{
  if (a.ndim() != 2) { throw DimensionError("expected a 2-D array"); }
  std::vector<double> data(a.data(), a.data() + a.size());
  return {a.shape(0), a.shape(1), std::move(data)};
}

auto stack(RealEchoSet const &set) -> py::array_t<double>
{
  set.validate();
  auto const rows = set[0].rows();
  auto const cols = set[0].cols();
  py::array_t<double> out({set.size(), rows, cols});
  for (Index i = 0; i < set.size(); ++i) {
    std::memcpy(out.mutable_data() + i * rows * cols, set[i].vec().data(),
                sizeof(double) * static_cast<std::size_t>(rows * cols));
  }
  return out;
}

auto mask_array(SamplingPattern const &p) -> py::array_t<std::uint8_t>
{
  py::array_t<std::uint8_t> out({p.rows, p.cols});
  std::memcpy(out.mutable_data(), p.mask.data(), p.mask.size());
  return out;
}

auto phantom_dict(Phantom const &ph) -> py::dict
{
  py::dict d;
  d["x0"] = to_numpy(ph.x0);
  d["r2star"] = to_numpy(ph.r2star);
  d["support"] = to_numpy(ph.support);
  d["theta"] = stack(ph.theta);
  return d;
}

auto result_dict(ReconResult const &r) -> py::dict
{
  py::dict d;
  d["x0"] = to_numpy(r.x0);
  d["r2star"] = to_numpy(r.r2star);
  d["h0"] = to_numpy(r.h0);
  d["xi"] = stack(r.xi);
  d["theta"] = stack(r.theta);
  d["iterations"] = r.diagnostics.iterations();
  d["converged"] = r.diagnostics.converged;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compressive-sensing R2* mapping: simulation, sampling and reconstruction";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InfeasiblePattern>(m, "InfeasiblePattern", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ReconParams>(m, "ReconParams")
    .def(py::init<>())
    .def_readwrite("lambda1", &ReconParams::lambda1)
    .def_readwrite("lambda2", &ReconParams::lambda2)
    .def_readwrite("lambda3", &ReconParams::lambda3)
    .def_readwrite("lam", &ReconParams::lambda)
    .def_readwrite("rho", &ReconParams::rho)
    .def_readwrite("outer_iters", &ReconParams::outer_iters)
    .def_readwrite("inner_iters", &ReconParams::inner_iters)
    .def_readwrite("stage_iters", &ReconParams::stage_iters)
    .def_readwrite("prox_iters", &ReconParams::prox_iters)
    .def_readwrite("tol_primal", &ReconParams::tol_primal)
    .def_readwrite("tol_change", &ReconParams::tol_change)
    .def_readwrite("e_min", &ReconParams::e_min)
    .def_readwrite("e_max", &ReconParams::e_max)
    .def_readwrite("r_max", &ReconParams::r_max)
    .def_readwrite("wavelet_levels", &ReconParams::wavelet_levels);

  m.def("default_params", [](std::string const &method) { return default_params(parse_method(method)); },
        py::arg("method"));

  m.def(
    "make_phantom",
    [](Index rows, Index cols, std::string const &preset, std::uint64_t seed, std::vector<double> times) {
      return phantom_dict(make_phantom(rows, cols, parse_preset(preset), seed, EchoTimes(std::move(times))));
    },
    py::arg("rows"), py::arg("cols"), py::arg("preset") = "shepp-like", py::arg("seed") = 1,
    py::arg("times") = std::vector<double>{7.64, 13.05, 18.46, 23.87});

  m.def(
    "poisson_disk",
    [](Index rows, Index cols, double rate, double d_min, int calib_radius, std::uint64_t seed) {
      return mask_array(poisson_disk({rows, cols, rate, d_min, calib_radius, seed}));
    },
    py::arg("rows"), py::arg("cols"), py::arg("rate"), py::arg("d_min") = 2.0, py::arg("calib_radius") = 0,
    py::arg("seed") = 0);

  py::class_<SimulatedCase>(m, "SimulatedCase")
    .def_property_readonly("phantom", [](SimulatedCase const &c) { return phantom_dict(c.phantom); })
    .def_property_readonly("d_min", [](SimulatedCase const &c) { return c.d_min; })
    .def_property_readonly("achieved_rate", [](SimulatedCase const &c) { return c.data.patterns[0].rate(); })
    .def_property_readonly("masks",
                           [](SimulatedCase const &c) {
                             py::list out;
                             for (auto const &p : c.data.patterns.patterns) { out.append(mask_array(p)); }
                             return out;
                           })
    .def("save", [](SimulatedCase const &c, std::string const &kspace, std::string const &coils) {
      save_kspace(kspace, c.data);
      save_coils(coils, c.coils);
    });

  m.def(
    "simulate",
    [](double rate, std::string const &scheme, std::vector<std::string> const &overrides, Index slice) {
      auto const cfg = parse_config("", overrides);
      if (scheme != "fixed" && scheme != "complementary") { throw InvalidArgument("unknown scheme '" + scheme + "'"); }
      auto const s = scheme == "complementary" ? PatternScheme::complementary : PatternScheme::fixed;
      return simulate_case(cfg, slice, rate, s);
    },
    py::arg("rate"), py::arg("scheme") = "fixed", py::arg("overrides") = std::vector<std::string>{},
    py::arg("slice") = 0);

  m.def(
    "reconstruct",
    [](SimulatedCase const &c, std::string const &method, ReconParams const &params) {
      ReconResult r;
      {
        py::gil_scoped_release release;
        r = reconstruct({parse_method(method), params}, c.data, c.coils);
      }
      return result_dict(r);
    },
    py::arg("case"), py::arg("method"), py::arg("params"));

  m.def(
    "masked_relative_error",
    [](py::array_t<double, py::array::c_style | py::array::forcecast> const &truth,
       py::array_t<double, py::array::c_style | py::array::forcecast> const &estimate,
       py::array_t<double, py::array::c_style | py::array::forcecast> const &mask) {
      return masked_relative_error(from_numpy(truth), from_numpy(estimate), from_numpy(mask));
    },
    py::arg("truth"), py::arg("estimate"), py::arg("mask"));

  m.def(
    "run_experiment",
    [](std::string const &config_text, std::vector<std::string> const &overrides) {
      auto const cfg = parse_config(config_text, overrides);
      ExperimentResult res;
      {
        py::gil_scoped_release release;
        res = run_experiment(cfg);
      }
      return metrics_csv(res.rows, res.hash);
    },
    py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def("config_hash", [](std::string const &text, std::vector<std::string> const &overrides) {
    return config_hash(parse_config(text, overrides));
  }, py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{});
}
