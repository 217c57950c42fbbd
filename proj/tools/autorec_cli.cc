// Experiment harness: single runs, sweeps, fixed-K formula validation and the
// opportunistic reinjection ablation. Writes results.csv, summary.json and,
// with --emit-traces, one trace file per run.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "autorec/experiment.h"

using namespace autorec;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitInvariant = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> mechanism;
  std::string out_dir = "results";
  bool emit_traces = false;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "First seed; replication i uses seed + i");
  cmd->add_option("--reps", c.reps, "Replications per configuration")->check(CLI::PositiveNumber);
  cmd->add_option("--mechanism", c.mechanism,
                  "baseline, autorec, autorec-no-opportunistic or fixed-k:K");
  cmd->add_option("--out-dir", c.out_dir, "Output directory");
  cmd->add_flag("--emit-traces", c.emit_traces, "Write one trace file per run under <out-dir>/traces");
  cmd->add_option("--threads", c.threads, "Worker threads (0: one per core)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.reps) cfg.replications = *c.reps;
  if (c.mechanism) cfg.mechanism = parse_mechanism(*c.mechanism);
  cfg.validate();
  return cfg;
}

std::string fmt(const std::optional<double>& v, double scale) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * scale);
  return buf;
}

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json aggregate_json(const Aggregate& a) {
  ordered_json j;
  j["mechanism"] = a.mechanism;
  if (!a.axis.empty()) {
    j["axis"] = a.axis;
    j["axis_value"] = a.axis_value;
  }
  j["config_hash"] = hash_hex(a.config_hash);
  j["runs"] = a.runs;
  j["lost_units"] = a.lost_units;
  j["multi_attempt_units"] = a.multi_attempt_units;
  j["recovery_latency_ms"] = opt(a.recovery_latency_ms);
  j["recovery_latency_max_ms"] = opt(a.recovery_latency_max_ms);
  j["recovery_latency_all_ms"] = opt(a.recovery_latency_all_ms);
  j["deterioration_rate"] = a.deterioration_rate;
  j["deterioration_rate_first_t_unit"] = a.deterioration_rate_first_t_unit;
  j["redundancy_cost"] = a.redundancy_cost;
  j["goodput_bps"] = a.goodput_bps;
  j["goodput_reduction"] = opt(a.goodput_reduction);
  j["goodput_reduction_raw"] = opt(a.goodput_reduction_raw);
  j["loss_rate"] = a.loss_rate;
  j["t_unit_ms"] = opt(a.t_unit_ms);
  j["off_mode_fraction"] = a.off_mode_fraction;
  j["delivered_min_fraction"] = a.min_delivered_fraction;
  j["reinjections"] = a.reinjections;
  j["opportunistic_reinjections"] = a.reinjections_opportunistic;
  j["freeze_count_per_100s"] = a.freeze_count_per_100s;
  j["freeze_ms_per_100s"] = a.freeze_ms_per_100s;
  j["deadline_miss_rate"] = opt(a.deadline_miss_rate);
  j["formula_latency_ms"] = opt(a.formula_latency_ms);
  j["formula_cost"] = opt(a.formula_cost);
  j["formula_goodput_reduction"] = opt(a.formula_goodput_reduction);
  return j;
}

void write_outputs(const Common& c, const std::string& command, const ExperimentConfig& base,
                   const Study& study) {
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  write_results_csv(dir / "results.csv", results_csv_body(study));

  ordered_json summary;
  summary["schema_version"] = 1;
  summary["command"] = command;
  summary["config"] = ordered_json::parse(config_to_json_text(base));
  summary["rows"] = ordered_json::array();
  for (const auto& row : study.rows) summary["rows"].push_back(aggregate_json(row));
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';

  if (c.emit_traces) {
    fs::create_directories(dir / "traces");
    for (const auto& group : study.runs) {
      for (const auto& r : group) {
        if (!r.trace_text) continue;
        std::string name = to_string(r.config.mechanism);
        for (auto& ch : name) ch = ch == ':' ? '-' : ch;
        name += "_" + hash_hex(r.key.config_hash) + "_seed" + std::to_string(r.key.seed) + ".trace";
        std::ofstream(dir / "traces" / name) << r.trace_text.value();
      }
    }
  }

  for (const auto& row : study.rows) {
    char axis_part[64] = "";
    if (!row.axis.empty()) std::snprintf(axis_part, sizeof axis_part, " %s=%g", row.axis.c_str(), row.axis_value);
    std::printf("%-26s%s runs=%d latency=%s ms det=%.3f%% cost=%.2f%% goodput_reduction=%s%%\n",
                row.mechanism.c_str(), axis_part, row.runs, fmt(row.recovery_latency_ms, 1).c_str(),
                100.0 * row.deterioration_rate, 100.0 * row.redundancy_cost,
                fmt(row.goodput_reduction, 100.0).c_str());
  }
  std::printf("wrote %s\n", (dir / "results.csv").string().c_str());
}

Runner make_runner(const Common& c) { return Runner({c.threads, c.emit_traces, true}); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss recovery simulator: baseline ARQ versus adaptive replica reinjection"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, validate_opts, ablation_opts;
  std::string axis;
  std::vector<double> values;
  std::vector<int> ks{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> bandwidths{2, 3, 4, 8, 10, 12};

  auto* run_cmd = app.add_subcommand("run", "Replicated runs of one configuration");
  add_common(run_cmd, run_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "One aggregate row per value of a config axis");
  add_common(sweep_cmd, sweep_opts);
  std::string axes_help = "One of:";
  for (const char* a : kSweepAxes) axes_help += std::string(" ") + a;
  sweep_cmd->add_option("--axis", axis, axes_help)->required();
  sweep_cmd->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');

  auto* validate_cmd = app.add_subcommand("validate-formulas", "Fixed-K runs next to the closed-form predictions");
  add_common(validate_cmd, validate_opts);
  validate_cmd->add_option("--ks", ks, "Comma-separated redundancy levels")->delimiter(',');

  auto* ablation_cmd =
      app.add_subcommand("ablation", "AutoRec with and without opportunistic reinjection over bandwidth (Mbps)");
  add_common(ablation_cmd, ablation_opts);
  ablation_cmd->add_option("--bandwidths", bandwidths, "Comma-separated bandwidths in Mbps")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const ExperimentConfig cfg = resolve(run_opts);
      Runner runner = make_runner(run_opts);
      Study s;
      s.runs.push_back(runner.run_replications(cfg));
      s.rows.push_back(aggregate(s.runs.back()));
      write_outputs(run_opts, "run", cfg, s);
    } else if (*sweep_cmd) {
      const ExperimentConfig cfg = resolve(sweep_opts);
      Runner runner = make_runner(sweep_opts);
      write_outputs(sweep_opts, "sweep", cfg, run_sweep(runner, cfg, axis, values));
    } else if (*validate_cmd) {
      const ExperimentConfig cfg = resolve(validate_opts);
      Runner runner = make_runner(validate_opts);
      write_outputs(validate_opts, "validate-formulas", cfg, validate_formulas(runner, cfg, ks));
    } else if (*ablation_cmd) {
      const ExperimentConfig cfg = resolve(ablation_opts);
      Runner runner = make_runner(ablation_opts);
      write_outputs(ablation_opts, "ablation", cfg, ablation(runner, cfg, bandwidths));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return 0;
}
