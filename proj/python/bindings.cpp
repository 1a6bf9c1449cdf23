#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "multikoop/analysis.hpp"
#include "multikoop/benchmark.hpp"
#include "multikoop/config.hpp"
#include "multikoop/game.hpp"
#include "multikoop/koopman.hpp"
#include "multikoop/pipeline.hpp"
#include "multikoop/reduction.hpp"

namespace py = pybind11;
using namespace multikoop;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  const auto dumped = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(dumped);
}

ExperimentConfig make_config(const std::string& profile, const py::object& overrides) {
  ExperimentConfig config = ExperimentConfig::with_profile(profile);
  if (!overrides.is_none()) config.apply_json(py_to_json(overrides));
  return config;
}

// Pipeline stages release the GIL for the duration of the C++ work and hand
// back plain Python dicts.
template <nlohmann::json (*Stage)(const ExperimentConfig&)>
py::object run_stage(const ExperimentConfig& config) {
  nlohmann::json summary;
  {
    py::gil_scoped_release release;
    summary = Stage(config);
  }
  return json_to_py(summary);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-agent Koopman modeling, analysis, and control toolkit";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "Error");

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init(&make_config), py::arg("profile") = "paper",
           py::arg("overrides") = py::none())
      .def_static(
          "load",
          [](const std::string& path, const std::string& profile) {
            return ExperimentConfig::load(path, profile);
          },
          py::arg("path"), py::arg("profile") = "paper")
      .def_property(
          "variant", [](const ExperimentConfig& c) { return to_string(c.variant); },
          [](ExperimentConfig& c, const std::string& v) { c.variant = variant_from_string(v); })
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def("apply", [](ExperimentConfig& c, const py::object& overrides) {
        c.apply_json(py_to_json(overrides));
      })
      .def("to_dict", [](const ExperimentConfig& c) { return json_to_py(c.to_json()); })
      .def("validate", &ExperimentConfig::validate)
      .def("__repr__", [](const ExperimentConfig& c) {
        return "Config(variant=" + to_string(c.variant) + ", seed=" + std::to_string(c.seed) +
               ", output_dir='" + c.output_dir + "')";
      });

  py::class_<StructuredKoopman>(m, "Model")
      .def_static("load", &StructuredKoopman::load, py::arg("path"))
      .def("save", &StructuredKoopman::save, py::arg("path"))
      .def_property_readonly(
          "variant", [](const StructuredKoopman& mdl) { return to_string(mdl.variant); })
      .def_property_readonly("n_agents", &StructuredKoopman::n_agents)
      .def("combined",
           [](const StructuredKoopman& mdl) {
             const auto sys = assemble_combined(mdl);
             return py::make_tuple(sys.a, sys.b);
           })
      .def("lift_state",
           [](const StructuredKoopman& mdl, int agent, const VectorXd& x) {
             if (agent < 0 || agent >= mdl.n_agents())
               throw DimensionError("lift_state: agent index out of range");
             return lift(mdl.dicts.x[agent], x);
           },
           py::arg("agent"), py::arg("x"))
      .def("predict",
           [](const StructuredKoopman& mdl, const VectorXd& psi0, const MatrixXd& controls,
              int steps) { return predict(assemble_combined(mdl), psi0, controls, steps); },
           py::arg("psi0"), py::arg("controls"), py::arg("steps"));

  py::class_<ReducedModel>(m, "Reduced")
      .def_static("load", &ReducedModel::load, py::arg("path"))
      .def("save", &ReducedModel::save, py::arg("path"))
      .def_property_readonly("n_agents", &ReducedModel::n_agents)
      .def("combined",
           [](const ReducedModel& mdl) {
             const auto sys = assemble_combined(mdl);
             return py::make_tuple(sys.a, sys.b);
           })
      .def("predict",
           [](const ReducedModel& mdl, const VectorXd& psi0, const MatrixXd& controls,
              int steps) { return predict(assemble_combined(mdl), psi0, controls, steps); },
           py::arg("psi0"), py::arg("controls"), py::arg("steps"));

  m.def("simulate", &run_stage<run_simulate>, py::arg("config"),
        "Integrate the benchmark and write trajectory CSVs");
  m.def("fit", &run_stage<run_fit>, py::arg("config"),
        "Generate training data, fit the lifted model, and evaluate held-out RMS");
  m.def("analyze", &run_stage<run_analyze>, py::arg("config"),
        "Compute stability and coupling metrics for the fitted matrices");
  m.def("control", &run_stage<run_control>, py::arg("config"),
        "Solve optimum and equilibrium control problems over sampled initial conditions");
  m.def("report", &run_stage<run_report>, py::arg("config"),
        "Collect the stage outputs into one comparison report");

  m.def(
      "simulate_trajectory",
      [](const std::string& variant, const VectorXd& x0, const MatrixXd& controls, int n_steps,
         double dt_slow, int m_ratio) {
        Trajectory traj;
        {
          py::gil_scoped_release release;
          if (variant_from_string(variant) == Variant::flat) {
            traj = simulate_flat(x0, controls, dt_slow, n_steps);
          } else {
            ScaleConfig scale;
            scale.dt_slow = dt_slow;
            scale.m = m_ratio;
            traj = simulate_hier(x0, controls, scale, n_steps);
          }
        }
        py::dict out;
        out["times"] = traj.times;
        out["states"] = traj.states;
        out["controls"] = traj.controls;
        return out;
      },
      py::arg("variant"), py::arg("x0"), py::arg("controls"), py::arg("n_steps"),
      py::arg("dt_slow") = 0.1, py::arg("m") = 100,
      "Integrate one benchmark trajectory in memory");

  m.def("initial_growth", &initial_growth, py::arg("a"),
        "log of the spectral norm: one-step worst-case growth");
  m.def(
      "kreiss_bound", [](const MatrixXd& a) { return kreiss_bound(a).value; }, py::arg("a"),
      "Resolvent-based lower bound on the maximum transient growth");
  m.def("solve_discrete_lyapunov", &solve_discrete_lyapunov, py::arg("f"), py::arg("rhs"),
        "Symmetric X with F X F^T - X = -RHS");
}
