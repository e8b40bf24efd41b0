#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dcqe/app.hpp"
#include "dcqe/config.hpp"
#include "dcqe/io.hpp"
#include "dcqe/quantum.hpp"
#include "dcqe/screen.hpp"
#include "dcqe/stats.hpp"

namespace py = pybind11;
using namespace dcqe;

namespace {

template <typename T>
py::dict table_dict(const OutcomeTable<T>& t) {
  py::dict d;
  t.for_each([&](SideOutcome u, SideOutcome l, T v) {
    if (v != T{})
      d[py::str(std::string(to_string(u)) + "," + std::string(to_string(l)))] = v;
  });
  return d;
}

MeasurementConfig experiment(const std::string& name, std::uint64_t pairs,
                             std::uint64_t seed) {
  MeasurementConfig cfg = catalog(parse_experiment(name));
  cfg.pair_count = pairs;
  cfg.seed = seed;
  return cfg;
}

py::tuple run_cli_py(std::vector<std::string> args) {
  args.insert(args.begin(), "dcqe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::dict declared_table(const std::string& name, const std::string& model) {
  return table_dict(
      declared_distribution(parse_model_descriptor(model), catalog(parse_experiment(name))).table);
}

py::dict simulate_table(const std::string& name, const std::string& model,
                        std::uint64_t pairs, std::uint64_t seed,
                        const std::string& detector, unsigned threads) {
  const MeasurementConfig cfg = experiment(name, pairs, seed);
  if (cfg.screen)
    throw std::invalid_argument("screen experiments have no outcome table");
  const DetectorModel det = detector_preset(detector);
  JointTable table;
  {
    py::gil_scoped_release release;
    const RunResult r = run_experiment(cfg, parse_model_descriptor(model), det, threads);
    const auto m = match_coincidences(r.clicks, det.coincidence_window, det.lower_delay);
    table = build_table(m.coincidences, cfg);
  }
  return table_dict(table.counts);
}

std::vector<double> intensities(const std::string& condition,
                                const std::vector<double>& xs) {
  const SlitGeometry g;
  const ScreenCondition c = parse_condition(condition);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(condition_intensity(g, c, x));
  return out;
}

double visibility_py(const std::vector<double>& xs,
                     const std::vector<double>& intensity, double window,
                     std::optional<double> fringe_period) {
  if (xs.size() != intensity.size() || xs.size() < 2)
    throw std::invalid_argument("xs and intensity need the same length >= 2");
  ScreenPattern p;
  p.xs = xs;
  p.intensity = intensity;
  p.bin_width = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  p.fringe_period = fringe_period;
  return visibility(p, window);
}

py::dict bomb_py(bool live) {
  const auto p = bomb_probabilities(live);
  py::dict d;
  for (auto o : {BombOutcome::Explode, BombOutcome::DetectorBright,
                 BombOutcome::DetectorDark})
    d[py::str(std::string(to_string(o)))] = p[static_cast<std::size_t>(o)];
  return d;
}

}  // namespace

PYBIND11_MODULE(_dcqe, m) {
  m.doc() = "Delayed-choice quantum eraser simulator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<LogError>(m, "LogError", base.ptr());
  py::register_exception<NoConsistentHistory>(m, "NoConsistentHistory", base.ptr());

  m.def("run_cli", &run_cli_py, py::arg("args"),
        "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
  m.def("declared_table", &declared_table, py::arg("experiment"),
        py::arg("model") = "QM",
        "Exact joint outcome probabilities, keyed 'UPPER,LOWER'.");
  m.def("simulate_table", &simulate_table, py::arg("experiment"),
        py::arg("model") = "QM", py::arg("pairs") = 10000, py::arg("seed") = 1,
        py::arg("detector") = "ideal", py::arg("threads") = 0,
        "Coincidence counts of a simulated run, keyed 'UPPER,LOWER'.");
  m.def("condition_intensity", &intensities, py::arg("condition"), py::arg("xs"),
        "Joint-weighted screen intensity for the default slit geometry.");
  m.def("visibility", &visibility_py, py::arg("xs"), py::arg("intensity"),
        py::arg("window"), py::arg("fringe_period") = py::none());
  m.def("fringe_period", [] { return SlitGeometry{}.fringe_period(); });
  m.def("first_envelope_zero", [] { return SlitGeometry{}.first_envelope_zero(); });
  m.def("bomb_probabilities", &bomb_py, py::arg("live"));
  m.def("pairs_to_significance", &pairs_to_significance, py::arg("alpha"));
  m.def("chi_square_sf", &chi_square_sf, py::arg("statistic"), py::arg("dof"));
}
