#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <numbers>

#include "chaoslab/harness.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/meanfield.hpp"
#include "chaoslab/particles.hpp"
#include "chaoslab/sobolev.hpp"

namespace py = pybind11;
using namespace chaoslab;

namespace {

KernelSpec kernel_by_name(const std::string& name, double length, int cutoff, double epsilon) {
  KernelSpec k = KernelSpec::zero(1, length);
  if (name == "kuramoto") k = KernelSpec::kuramoto(length);
  else if (name == "biot_savart_2d") k = KernelSpec::biot_savart_2d(length, cutoff);
  else if (name == "attractive_log_2d") k = KernelSpec::attractive_log_2d(length, cutoff);
  else if (name != "zero") throw py::value_error("unknown kernel '" + name + "'");
  return epsilon > 0.0 ? mollify(k, epsilon) : k;
}

py::dict verdict_dict(const Verdict& v) {
  py::dict d;
  d["id"] = v.id;
  d["passed"] = v.passed;
  d["measured"] = v.measured;
  d["threshold"] = v.threshold;
  d["hard"] = v.hard;
  d["note"] = v.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Propagation-of-chaos experiments on the torus.";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());

  m.attr("__version__") = version_string();

  m.def("sobolev_constant", &sobolev_constant, py::arg("n"));
  m.def("critical_exponent", &critical_exponent, py::arg("n"));
  m.def("kuramoto_order_parameter", &kuramoto_order_parameter, py::arg("sigma"));
  m.def("mollifier_transform", &mollifier_transform, py::arg("dim"), py::arg("epsilon"),
        py::arg("wavenumber"));
  m.def("log_potential_cell_l2", &log_potential_cell_l2, py::arg("length"));

  m.def(
      "h_minus1_norm",
      [](const std::string& name, double length, int cutoff, double epsilon) {
        const auto k = kernel_by_name(name, length, cutoff, epsilon);
        return h_minus1_norm(k, TorusGeometry(k.dim(), length), cutoff);
      },
      py::arg("kernel"), py::arg("length") = 2 * std::numbers::pi, py::arg("cutoff") = 64,
      py::arg("epsilon") = 0.0);

  m.def(
      "eval_kernel",
      [](const std::string& name, std::vector<double> x, double length, int cutoff, double epsilon) {
        const auto k = kernel_by_name(name, length, cutoff, epsilon);
        const auto v = eval_kernel(k, x);
        return std::vector<double>(v.begin(), v.begin() + k.dim());
      },
      py::arg("kernel"), py::arg("x"), py::arg("length") = 2 * std::numbers::pi, py::arg("cutoff") = 32,
      py::arg("epsilon") = 0.0);

  m.def(
      "simulate_kuramoto",
      [](int N, std::size_t M, double sigma, double dt, double t_max, std::uint64_t seed, int workers) {
        const double L = 2 * std::numbers::pi;
        SimConfig c;
        c.N = N;
        c.sigma = sigma;
        c.dt = dt;
        c.t_max = t_max;
        c.kernel = KernelSpec::kuramoto(L);
        c.M = M;
        c.seed = seed;
        c.snapshot_times = {t_max};
        c.workers = workers;
        GridSpec g(TorusGeometry(1, L), 128);
        const DensityField u(g, std::vector<double>(g.size(), 1.0 / L));
        py::array_t<double> out({static_cast<py::ssize_t>(M), static_cast<py::ssize_t>(N)});
        {
          py::gil_scoped_release release;
          run_ensemble(c, sample_initial(u, N, M, seed), [&](const SnapshotInfo&, const ParticleEnsemble& e) {
            py::gil_scoped_acquire acquire;
            std::memcpy(out.mutable_data(), e.positions.data(), e.positions.size() * sizeof(double));
          });
        }
        return out;
      },
      py::arg("N"), py::arg("M"), py::arg("sigma"), py::arg("dt") = 0.01, py::arg("t_max") = 1.0,
      py::arg("seed") = 1, py::arg("workers") = 1);

  m.def("preset_names", &preset_names);
  m.def("preset_config", [](const std::string& p) { return config_to_json(preset_config(p), 2); },
        py::arg("preset"));
  m.def("validate_config", [](const std::string& text) { return config_to_json(parse_config(text), 2); },
        py::arg("config_json"));

  m.def(
      "run",
      [](const std::string& config_json, const std::string& output_dir) {
        auto c = parse_config(config_json);
        if (!output_dir.empty()) c.output_dir = output_dir;
        RunOptions o;
        o.quiet = true;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_preset(c, o);
        }
        py::dict d;
        py::list vs;
        for (const auto& v : r.verdicts) vs.append(verdict_dict(v));
        d["verdicts"] = vs;
        d["files"] = r.files;
        d["warnings"] = r.warnings;
        d["exit_code"] = r.exit_code();
        return d;
      },
      py::arg("config_json"), py::arg("output_dir") = "");

  m.def("emit_plotdata", &emit_plotdata, py::arg("series_files"), py::arg("out_path"));
}
