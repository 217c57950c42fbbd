#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "autorec/config.h"
#include "autorec/metrics.h"

namespace autorec {

struct RunResult {
  ExperimentConfig config;  // seed set to this run's seed
  PairKey key;
  RunMetrics metrics;
  // Against the baseline run with the same key; absent for baseline runs.
  std::optional<GoodputReduction> goodput_reduction;
  std::optional<std::string> trace_text;
};

// Summary over the replications of one configuration. Unit-level metrics
// (latency, deterioration) pool every lost unit across runs; run-level
// metrics (cost, goodput, loss rate) are means of per-run values.
struct Aggregate {
  std::string mechanism;
  std::string axis;  // empty outside sweeps
  double axis_value = 0.0;
  std::uint64_t config_hash = 0;
  int runs = 0;
  std::uint64_t lost_units = 0;
  std::uint64_t multi_attempt_units = 0;
  std::optional<double> recovery_latency_ms;  // display rule: first retransmission dropped
  std::optional<double> recovery_latency_max_ms;
  std::optional<double> recovery_latency_all_ms;
  double deterioration_rate = 0.0;
  double deterioration_rate_first_t_unit = 0.0;
  double redundancy_cost = 0.0;
  double goodput_bps = 0.0;
  std::optional<double> goodput_reduction;      // floored mean
  std::optional<double> goodput_reduction_raw;  // signed mean
  double loss_rate = 0.0;
  std::optional<double> t_unit_ms;
  double off_mode_fraction = 0.0;
  double min_delivered_fraction = 1.0;
  std::uint64_t reinjections = 0;
  std::uint64_t reinjections_opportunistic = 0;
  double freeze_count_per_100s = 0.0;
  double freeze_ms_per_100s = 0.0;
  std::optional<double> deadline_miss_rate;
  // Model predictions at the measured loss rate and T_unit, for fixed-K runs.
  std::optional<double> formula_latency_ms;
  std::optional<double> formula_cost;
  std::optional<double> formula_goodput_reduction;
};

Aggregate aggregate(const std::vector<RunResult>& runs);

struct RunnerOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  bool keep_traces = false;
  // Run the paired baseline to report goodput reduction.
  bool paired_baseline = true;
};

// Executes simulations on a worker pool. Baseline runs are cached by pairing
// key so several mechanisms over the same config share them.
class Runner {
 public:
  explicit Runner(RunnerOptions options = {});

  // One simulation (no pairing).
  static RunResult run_single(const ExperimentConfig& config, bool keep_trace);

  // `config.replications` runs with seeds config.seed, config.seed + 1, ...
  // Results come back in seed order regardless of completion order.
  std::vector<RunResult> run_replications(const ExperimentConfig& config);

  // Several configs, all replications, in one parallel batch.
  std::vector<std::vector<RunResult>> run_batch(const std::vector<ExperimentConfig>& configs);

  std::size_t baseline_cache_size() const;

 private:
  RunMetrics baseline_for(const ExperimentConfig& config);

  RunnerOptions options_;
  mutable std::mutex mu_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, RunMetrics> baselines_;
};

inline constexpr const char* kSweepAxes[] = {"alpha", "beta", "gamma", "bandwidth", "rtt", "loss_rate", "k"};

// Applies one sweep value. Units: alpha and rtt in ms, bandwidth in Mbps,
// beta, gamma and loss_rate as fractions, k as an integer (selects fixed-k).
// Throws std::invalid_argument for an unknown axis.
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value);

// Per-configuration runs and their aggregates, index-aligned.
struct Study {
  std::vector<std::vector<RunResult>> runs;
  std::vector<Aggregate> rows;
};

// One aggregate per value. Throws std::invalid_argument on an unknown axis or
// an empty value list.
Study run_sweep(Runner& runner, const ExperimentConfig& base, const std::string& axis,
                const std::vector<double>& values);

// Fixed-K runs for each K with formula predictions filled in.
Study validate_formulas(Runner& runner, const ExperimentConfig& base, const std::vector<int>& ks);

// Full AutoRec and the variant without opportunistic reinjection over a
// bandwidth sweep (Mbps); rows alternate autorec, variant.
Study ablation(Runner& runner, const ExperimentConfig& base, const std::vector<double>& bandwidths_mbps);

// CSV output: one schema for per-run rows (row_type=run, seed set) and
// aggregate rows (row_type=aggregate). Numeric column names carry their unit.
// The first line of a results file is a `#` comment with a generation
// timestamp; everything after it is a pure function of the inputs.
std::string csv_header();
std::string csv_row(const Aggregate& a, std::optional<std::uint64_t> seed = std::nullopt);
// Per-run rows, in the given order, followed by the aggregate rows.
std::string results_csv_body(const Study& study);
void write_results_csv(const std::filesystem::path& path, const std::string& body);

}  // namespace autorec
