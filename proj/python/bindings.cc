#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "autorec/experiment.h"
#include "autorec/netsim.h"

namespace py = pybind11;
using namespace autorec;

namespace {

py::object opt(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict aggregate_dict(const Aggregate& a) {
  py::dict d;
  d["mechanism"] = a.mechanism;
  d["runs"] = a.runs;
  d["lost_units"] = a.lost_units;
  d["multi_attempt_units"] = a.multi_attempt_units;
  d["recovery_latency_ms"] = opt(a.recovery_latency_ms);
  d["recovery_latency_all_ms"] = opt(a.recovery_latency_all_ms);
  d["deterioration_rate"] = a.deterioration_rate;
  d["deterioration_rate_first_t_unit"] = a.deterioration_rate_first_t_unit;
  d["redundancy_cost"] = a.redundancy_cost;
  d["goodput_bps"] = a.goodput_bps;
  d["goodput_reduction"] = opt(a.goodput_reduction);
  d["goodput_reduction_raw"] = opt(a.goodput_reduction_raw);
  d["loss_rate"] = a.loss_rate;
  d["t_unit_ms"] = opt(a.t_unit_ms);
  d["off_mode_fraction"] = a.off_mode_fraction;
  d["delivered_min_fraction"] = a.min_delivered_fraction;
  d["reinjections"] = a.reinjections;
  d["deadline_miss_rate"] = opt(a.deadline_miss_rate);
  d["formula_latency_ms"] = opt(a.formula_latency_ms);
  d["formula_cost"] = opt(a.formula_cost);
  d["formula_goodput_reduction"] = opt(a.formula_goodput_reduction);
  return d;
}

ExperimentConfig config_of(const std::string& json_text) {
  return json_text.empty() ? ExperimentConfig{} : config_from_json_text(json_text);
}

}  // namespace

PYBIND11_MODULE(_autorec, m) {
  m.doc() = "Loss recovery simulator bindings";

  m.def("f_recovery_latency", [](int k, double r, double t_unit_ms) {
    return f_recovery_latency(k, r, Millis{t_unit_ms}).count();
  }, py::arg("k"), py::arg("r"), py::arg("t_unit_ms"));
  m.def("g_redundancy_cost", &g_redundancy_cost, py::arg("k"), py::arg("r"));
  m.def("h_goodput_reduction", &h_goodput_reduction, py::arg("k"), py::arg("r"));

  m.def("decide_k_theta", [](double r, double t_unit_ms, double alpha_ms, double beta, double gamma, int k_max) {
    IntervalStats s;
    s.packets_sent = r > 0 ? 1 : 0;
    s.losses_detected = r > 0 ? 1 : 0;
    s.loss_rate = r;
    s.avg_loss_detection_time = Millis{t_unit_ms};
    const Tolerances tol{Millis{alpha_ms}, beta, gamma};
    tol.validate();
    const auto d = decide_k_theta(s, tol, k_max);
    return py::make_tuple(d.k_alpha, d.k_beta, d.k_gamma, d.k_theta);
  }, py::arg("r"), py::arg("t_unit_ms"), py::arg("alpha_ms"), py::arg("beta"), py::arg("gamma"),
     py::arg("k_max") = kDefaultKMax,
     "Returns (k_alpha, k_beta, k_gamma, k_theta).");

  m.def("default_config_json", [] { return config_to_json_text(ExperimentConfig{}); });
  m.def("normalize_config_json", [](const std::string& text) { return config_to_json_text(config_of(text)); },
        py::arg("config_json"));

  m.def("run_trace", [](const std::string& config_json) {
    const ExperimentConfig c = config_of(config_json);
    py::gil_scoped_release release;
    return run(c).to_text();
  }, py::arg("config_json") = "", "One simulation; returns the trace text.");

  m.def("run_replications", [](const std::string& config_json, bool paired_baseline) {
    const ExperimentConfig c = config_of(config_json);
    Aggregate a;
    {
      py::gil_scoped_release release;
      Runner runner({1, false, paired_baseline});
      a = aggregate(runner.run_replications(c));
    }
    return aggregate_dict(a);
  }, py::arg("config_json") = "", py::arg("paired_baseline") = true,
     "Runs config.replications seeds and returns the aggregate as a dict.");

  m.def("trace_metrics", [](const std::string& trace_text, double duration_s, double startup_buffer_s) {
    const Trace t = Trace::from_text(trace_text);
    const auto to_us = [](double s) { return Duration{static_cast<std::int64_t>(std::llround(s * 1e6))}; };
    const RunMetrics rm = compute_metrics(t, to_us(duration_s), to_us(startup_buffer_s));
    py::dict d;
    d["lost_units"] = rm.latency.lost_units;
    d["recovery_latency_ms"] = opt(rm.latency.mean_ms);
    d["recovery_latency_all_ms"] = opt(rm.latency.mean_all_ms);
    d["deterioration_rate"] = rm.deterioration_rate;
    d["redundancy_cost"] = rm.redundancy_cost;
    d["goodput_bps"] = rm.goodput_bps;
    d["loss_rate"] = rm.loss_rate;
    d["delivered_fraction"] = rm.delivered_fraction;
    d["initials"] = rm.initials;
    d["retransmissions"] = rm.retransmissions;
    d["reinjections"] = rm.reinjections;
    return d;
  }, py::arg("trace_text"), py::arg("duration_s"), py::arg("startup_buffer_s") = 1.0);
}
