// Python bindings: coding primitives, pulse design and JSON-driven experiments.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdlink/coding.hpp"
#include "fdlink/dsp.hpp"
#include "fdlink/harness.hpp"

namespace py = pybind11;
using namespace fdlink;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict row_to_dict(const ResultRow& r) {
  py::dict d;
  d["mode"] = r.mode;
  d["combiner"] = r.combiner;
  d["code_rate"] = r.code_rate;
  d["iteration"] = r.iteration;
  d["snr_db"] = r.snr_db;
  d["ber"] = r.ber;
  d["bits_counted"] = r.bits_counted;
  d["sic_depth_db"] = r.sic_depth_db ? py::cast(*r.sic_depth_db) : py::none();
  d["si_nmse_db"] = r.si_nmse_db ? py::cast(*r.si_nmse_db) : py::none();
  d["far_nmse_db"] = r.far_nmse_db ? py::cast(*r.far_nmse_db) : py::none();
  d["seed"] = r.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fdlink, m) {
  m.doc() = "Full-duplex acoustic link simulator core";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("code_rates", &supported_code_rates);

  m.def(
      "conv_encode",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> bits, const std::string& rate) {
        return to_array(conv_encode({bits.data(), static_cast<std::size_t>(bits.size())}, code_by_rate(rate)));
      },
      py::arg("bits"), py::arg("rate"));

  m.def(
      "viterbi_decode",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> soft, const std::string& rate) {
        return to_array(viterbi_decode({soft.data(), static_cast<std::size_t>(soft.size())}, code_by_rate(rate)));
      },
      py::arg("soft"), py::arg("rate"), "Soft values use +1 for bit 0 and -1 for bit 1.");

  m.def(
      "design_rrc",
      [](double rolloff, int span, int sps) { return to_array(design_rrc(rolloff, span, sps).coefficients); },
      py::arg("rolloff"), py::arg("span_symbols"), py::arg("samples_per_symbol"));

  m.def("presets", &preset_names);
  m.def(
      "preset_json", [](const std::string& name) { return experiment_to_json_text(preset(name)); }, py::arg("name"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        ExperimentSpec spec = experiment_from_json_text(config_json);
        spec.finalize();
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(spec, false);
        }
        py::list rows;
        for (const auto& r : res.rows) rows.append(row_to_dict(r));
        return py::make_tuple(rows, res.skipped);
      },
      py::arg("config_json"), "Runs the sweep described by a JSON config; returns (rows, skipped).");

  m.def(
      "results_csv",
      [](const std::string& config_json) {
        ExperimentSpec spec = experiment_from_json_text(config_json);
        spec.finalize();
        py::gil_scoped_release release;
        return results_csv(run_experiment(spec, false).rows);
      },
      py::arg("config_json"));
}
