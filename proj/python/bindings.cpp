// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Python bindings. Structured results cross the boundary as JSON text; the
// package wrapper decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"
#include "burstpar/graph.hpp"
#include "burstpar/manifest.hpp"
#include "burstpar/planner.hpp"
#include "burstpar/scaling.hpp"
#include "burstpar/sim.hpp"
#include "burstpar/synth.hpp"

namespace py = pybind11;
using namespace burstpar;
using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
}

SimConfig config_from_text(const std::string& text) {
  SimConfig c = text.empty() ? SimConfig{} : config_from_json(parse_or_throw(text));
  c.validate();
  return c;
}

InterferenceTable table_from_text(const std::string& text) {
  return text.empty() ? InterferenceTable::synthetic()
                      : interference_from_json(parse_or_throw(text));
}

std::string scenario_json(const ScenarioResult& r) {
  json doc = metrics_to_json(r.run.result.metrics);
  doc["predicted_iteration_us"] = r.plan.predicted_iteration_us;
  doc["feedback_rounds"] = r.run.rounds;
  doc["converged"] = r.run.converged;
  doc["sensitive_ops"] = std::vector<int>(r.run.sensitive.begin(), r.run.sensitive.end());
  return doc.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "burstpar core: planner, scaling analysis and cluster simulator";
  m.attr("__version__") = tool_version();

  static py::exception<Error> error_type(m, "BurstparError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      inst.attr("kind") = error_kind_name(e.kind());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<CompGraph>(m, "CompGraph")
      .def_static("from_json", [](const std::string& text) {
        return graph_from_json(parse_or_throw(text));
      })
      .def_static("load", [](const std::string& path) { return load_graph(path); })
      .def("to_json", [](const CompGraph& g) { return graph_to_json(g).dump(); })
      .def("save", [](const CompGraph& g, const std::string& path) { save_graph(g, path); })
      .def("__len__", &CompGraph::size)
      .def_property_readonly("global_batch", &CompGraph::global_batch)
      .def("with_global_batch", [](const CompGraph& g, int b) { return with_global_batch(g, b); })
      .def("with_network", [](const CompGraph& g, double bandwidth, double delay_us) {
        return with_network(g, NetworkProfile{bandwidth, delay_us});
      });

  m.def("model_families", &model_families);
  m.def(
      "generate_model",
      [](const std::string& family, int global_batch, std::uint64_t seed, int depth, int layers) {
        SynthOptions o;
        o.global_batch = global_batch;
        o.seed = seed;
        o.depth = depth;
        o.layers = layers;
        return generate_model(family, o);
      },
      py::arg("family"), py::arg("global_batch") = 32, py::arg("seed") = kDefaultSeed,
      py::arg("depth") = 16, py::arg("layers") = 12);
  m.def("param_count", &param_count);

  py::class_<TrainingPlan>(m, "TrainingPlan")
      .def_readonly("total_gpus", &TrainingPlan::total_gpus)
      .def_readonly("amp_limit", &TrainingPlan::amp_limit)
      .def_readonly("predicted_iteration_us", &TrainingPlan::predicted_iteration_us)
      .def_readonly("fallback_layers", &TrainingPlan::fallback_layers)
      .def_readonly("search_wall_s", &TrainingPlan::search_wall_s)
      .def("g_of", &TrainingPlan::g_of)
      .def_static("load", [](const std::string& path) { return load_plan(path); });

  m.def(
      "plan",
      [](const CompGraph& g, int gpus, double amp_limit, int global_batch, bool concurrency) {
        PlannerOptions o;
        o.allow_concurrency = concurrency;
        py::gil_scoped_release release;
        return plan(g, gpus, amp_limit, global_batch, o);
      },
      py::arg("graph"), py::arg("gpus"), py::arg("amp_limit") = 2.0, py::arg("global_batch") = 0,
      py::arg("allow_concurrency") = true);
  m.def(
      "brute_force_plan",
      [](const CompGraph& g, int gpus, double amp_limit) {
        return brute_force_plan(g, gpus, amp_limit);
      },
      py::arg("graph"), py::arg("gpus"), py::arg("amp_limit"));
  m.def("plan_to_json", [](const CompGraph& g, const TrainingPlan& p) {
    return plan_to_json(g, p).dump();
  });
  m.def("plan_summary", &plan_summary);

  m.def(
      "speedup_csv",
      [](const CompGraph& g, const std::string& strategy, const std::vector<int>& gpu_counts,
         std::int64_t base_batch, const std::string& curve) {
        SampleEfficiencyCurve c =
            curve.empty() ? synthetic_curve() : curve_from_json(parse_or_throw(curve));
        if (base_batch <= 0) base_batch = g.global_batch();
        return estimates_to_csv(
            speedup_curve(parse_strategy(strategy), g, c, gpu_counts, g.network(), base_batch));
      },
      py::arg("graph"), py::arg("strategy"), py::arg("gpu_counts"), py::arg("base_batch") = 0,
      py::arg("curve_json") = "");

  m.def("default_sim_config", [] { return config_to_json(SimConfig{}).dump(); });
  m.def(
      "run_scenario",
      [](const std::string& scenario, const CompGraph& g, int gpus, double amp_limit,
         int iterations, const std::string& config, const std::string& interference) {
        Scenario sc = parse_scenario(scenario);
        SimConfig c = config_from_text(config);
        InterferenceTable t = table_from_text(interference);
        py::gil_scoped_release release;
        return scenario_json(run_scenario(sc, g, gpus, amp_limit, c, t, iterations));
      },
      py::arg("scenario"), py::arg("graph"), py::arg("gpus"), py::arg("amp_limit") = 2.0,
      py::arg("iterations") = 6, py::arg("config_json") = "",
      py::arg("interference_json") = "");
  m.def(
      "pareto_sweep_csv",
      [](const CompGraph& g, int gpus, const std::string& spec, const std::string& config) {
        SweepSpec s = spec.empty() ? SweepSpec{} : sweep_spec_from_json(parse_or_throw(spec));
        SimConfig c = config_from_text(config);
        py::gil_scoped_release release;
        return sweep_to_csv(pareto_sweep(g, gpus, s, c, InterferenceTable::synthetic()));
      },
      py::arg("graph"), py::arg("gpus"), py::arg("spec_json") = "", py::arg("config_json") = "");
}
