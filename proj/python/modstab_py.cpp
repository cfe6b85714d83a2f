#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "modstab/scenario.hpp"

namespace py = pybind11;
using namespace modstab;

namespace {

ModularSpec modular_of(const std::string& spec) { return parse_modular_shorthand(spec); }

VecX vec_of(const std::vector<Scalar>& v) { return VecX(v); }

// Records cross the boundary as JSON text; the Python side decodes them.
py::tuple run_config(const std::string& config_json, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> probes, std::optional<std::string> timestamp) {
  RunOptions opts{seed, probes, timestamp};
  RunResult res;
  {
    py::gil_scoped_release release;
    json cfg;
    try {
      cfg = json::parse(config_json);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config does not parse: ") + e.what());
    }
    res = run_scenario(cfg, opts);
  }
  return py::make_tuple(to_jsonl(res.records), res.exit_code);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stability lab kernels: modulars, unimodular decomposition, scenario runner";
  m.attr("__version__") = std::string(kToolVersion);
  m.attr("REPORT_SCHEMA") = std::string(kReportSchema);

  static py::exception<Error> base(m, "ModstabError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<OutOfDiscError>(m, "OutOfDiscError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  m.def(
      "modular", [](const std::string& spec, const std::vector<Scalar>& x) { return modular_of(spec)(vec_of(x)); },
      py::arg("spec"), py::arg("x"), "rho(x) for a modular given as 'norm', 'power:<p>' or 'orlicz:<preset>'");
  m.def(
      "luxemburg_norm",
      [](const std::string& spec, const std::vector<Scalar>& x, double tol) {
        return luxemburg_norm(modular_of(spec), vec_of(x), tol);
      },
      py::arg("spec"), py::arg("x"), py::arg("tol") = 1e-12);

  m.def(
      "three_unimodular_decomposition",
      [](Scalar w) {
        const auto t = three_unimodular_decomposition(w);
        return py::make_tuple(t.mu1, t.mu2, t.mu3);
      },
      py::arg("w"));
  m.def("sample_unit_circle", &sample_unit_circle, py::arg("seed"), py::arg("n"));
  m.def(
      "algebra_mul",
      [](const std::string& preset, const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
        const auto alg = AlgebraSpec::preset(preset, a.size());
        return alg.mul(vec_of(a), vec_of(b)).coords();
      },
      py::arg("preset"), py::arg("a"), py::arg("b"));

  m.def("list_scenarios", &list_builtin_scenarios);
  m.def(
      "builtin_scenario_json", [](const std::string& name) { return builtin_scenario(name).dump(); },
      py::arg("name"));
  m.def("run_config_json", &run_config, py::arg("config_json"), py::arg("seed_override") = py::none(),
        py::arg("probes") = py::none(), py::arg("timestamp") = py::none());
}
