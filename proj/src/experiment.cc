#include "autorec/experiment.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "autorec/netsim.h"

namespace autorec {
namespace {

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string opt_num(const std::optional<double>& v, int precision = 6) {
  return v ? num(*v, precision) : std::string{};
}

double mean_of(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; }

}  // namespace

Aggregate aggregate(const std::vector<RunResult>& runs) {
  Aggregate a;
  if (runs.empty()) return a;
  const auto& first = runs.front().config;
  a.mechanism = to_string(first.mechanism);
  a.config_hash = runs.front().key.config_hash;
  a.runs = static_cast<int>(runs.size());

  double sum_ms = 0, sum_all_ms = 0, cost = 0, goodput = 0, loss = 0, off = 0;
  double gr = 0, t_unit = 0, freeze_n = 0, freeze_ms = 0, dmr = 0;
  std::size_t gr_n = 0, t_unit_n = 0, dmr_n = 0;
  std::uint64_t recovered = 0, deteriorated = 0, deteriorated_first = 0;
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    a.lost_units += m.latency.lost_units;
    a.multi_attempt_units += m.latency.multi_attempt_units;
    recovered += m.latency.recovered_units;
    deteriorated += m.latency.deteriorated;
    deteriorated_first += m.latency.deteriorated_first_t_unit;
    sum_ms += m.latency.sum_ms;
    sum_all_ms += m.latency.sum_all_ms;
    if (m.latency.max_ms) a.recovery_latency_max_ms = std::max(a.recovery_latency_max_ms.value_or(0.0), *m.latency.max_ms);
    cost += m.redundancy_cost;
    goodput += m.goodput_bps;
    loss += m.loss_rate;
    off += m.off_mode_fraction;
    if (r.goodput_reduction) {
      gr += r.goodput_reduction->raw;
      ++gr_n;
    }
    if (m.mean_t_unit_ms) {
      t_unit += *m.mean_t_unit_ms;
      ++t_unit_n;
    }
    a.min_delivered_fraction = std::min(a.min_delivered_fraction, m.delivered_fraction);
    a.reinjections += m.reinjections;
    a.reinjections_opportunistic += m.reinjections_opportunistic;
    freeze_n += m.qoe.freeze_count_per_100s;
    freeze_ms += m.qoe.freeze_ms_per_100s;
    if (m.qoe.deadline_miss_rate) {
      dmr += *m.qoe.deadline_miss_rate;
      ++dmr_n;
    }
  }
  const std::size_t n = runs.size();
  if (a.multi_attempt_units > 0) a.recovery_latency_ms = sum_ms / static_cast<double>(a.multi_attempt_units);
  if (recovered > 0) a.recovery_latency_all_ms = sum_all_ms / static_cast<double>(recovered);
  if (a.lost_units > 0) {
    a.deterioration_rate = static_cast<double>(deteriorated) / static_cast<double>(a.lost_units);
    a.deterioration_rate_first_t_unit = static_cast<double>(deteriorated_first) / static_cast<double>(a.lost_units);
  }
  a.redundancy_cost = mean_of(cost, n);
  a.goodput_bps = mean_of(goodput, n);
  a.loss_rate = mean_of(loss, n);
  a.off_mode_fraction = mean_of(off, n);
  if (gr_n > 0) {
    a.goodput_reduction_raw = mean_of(gr, gr_n);
    a.goodput_reduction = std::max(0.0, *a.goodput_reduction_raw);
  }
  if (t_unit_n > 0) a.t_unit_ms = mean_of(t_unit, t_unit_n);
  a.freeze_count_per_100s = mean_of(freeze_n, n);
  a.freeze_ms_per_100s = mean_of(freeze_ms, n);
  if (dmr_n > 0) a.deadline_miss_rate = mean_of(dmr, dmr_n);

  if (first.mechanism.kind == Mechanism::kFixedK && a.loss_rate > 0.0 && a.loss_rate < 1.0 && a.t_unit_ms) {
    const int k = first.mechanism.fixed_k;
    a.formula_latency_ms = f_recovery_latency(k, a.loss_rate, Millis{*a.t_unit_ms}).count();
    a.formula_cost = g_redundancy_cost(k, a.loss_rate);
    a.formula_goodput_reduction = h_goodput_reduction(k, a.loss_rate);
  }
  return a;
}

Runner::Runner(RunnerOptions options) : options_(options) {}

RunResult Runner::run_single(const ExperimentConfig& config, bool keep_trace) {
  RunResult r;
  r.config = config;
  r.key = {pairing_hash(config), config.seed};
  const Trace trace = run(config);
  r.metrics = compute_metrics(trace, config.traffic.duration, config.startup_buffer);
  if (keep_trace) r.trace_text = trace.to_text();
  return r;
}

RunMetrics Runner::baseline_for(const ExperimentConfig& config) {
  const auto key = std::make_pair(pairing_hash(config), config.seed);
  {
    std::lock_guard lock(mu_);
    if (auto it = baselines_.find(key); it != baselines_.end()) return it->second;
  }
  RunMetrics m = run_single(config.as_baseline(), false).metrics;
  std::lock_guard lock(mu_);
  return baselines_.emplace(key, m).first->second;
}

std::size_t Runner::baseline_cache_size() const {
  std::lock_guard lock(mu_);
  return baselines_.size();
}

std::vector<RunResult> Runner::run_replications(const ExperimentConfig& config) {
  return run_batch({config}).front();
}

std::vector<std::vector<RunResult>> Runner::run_batch(const std::vector<ExperimentConfig>& configs) {
  struct Job {
    std::size_t group;
    std::size_t rep;
    ExperimentConfig config;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<RunResult>> out(configs.size());
  for (std::size_t g = 0; g < configs.size(); ++g) {
    configs[g].validate();
    out[g].resize(static_cast<std::size_t>(configs[g].replications));
    for (int i = 0; i < configs[g].replications; ++i) {
      ExperimentConfig c = configs[g];
      c.seed = configs[g].seed + static_cast<std::uint64_t>(i);
      c.replications = 1;
      jobs.push_back({g, static_cast<std::size_t>(i), std::move(c)});
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const Job& job = jobs[j];
        RunResult r = run_single(job.config, options_.keep_traces);
        if (job.config.mechanism.kind == Mechanism::kBaseline) {
          std::lock_guard lock(mu_);
          baselines_.emplace(std::make_pair(r.key.config_hash, r.key.seed), r.metrics);
        } else if (options_.paired_baseline) {
          const RunMetrics b = baseline_for(job.config);
          r.goodput_reduction = goodput_reduction(r.metrics.goodput_bps, r.key, b.goodput_bps, r.key);
        }
        out[job.group][job.rep] = std::move(r);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  unsigned threads = options_.threads ? options_.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, jobs.size())));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value) {
  ExperimentConfig c = base;
  if (axis == "alpha") {
    c.tolerances.alpha = Millis{value};
  } else if (axis == "beta") {
    c.tolerances.beta = value;
  } else if (axis == "gamma") {
    c.tolerances.gamma = value;
  } else if (axis == "bandwidth") {
    if (!(value > 0)) throw std::invalid_argument("bandwidth: must be > 0 Mbps");
    c.link.bandwidth_bps = static_cast<std::uint64_t>(std::llround(value * 1e6));
  } else if (axis == "rtt") {
    c.link.rtt = round_to_us(Millis{value});
  } else if (axis == "loss_rate") {
    c.link.loss = BernoulliLoss{value};
  } else if (axis == "k") {
    if (value != std::floor(value)) throw std::invalid_argument("k: must be an integer");
    c.mechanism = {Mechanism::kFixedK, static_cast<int>(value)};
  } else {
    throw std::invalid_argument("unknown sweep axis '" + axis +
                                "' (expected alpha, beta, gamma, bandwidth, rtt, loss_rate or k)");
  }
  c.validate();
  return c;
}

Study run_sweep(Runner& runner, const ExperimentConfig& base, const std::string& axis,
                const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument(axis + ": sweep needs at least one value");
  std::vector<ExperimentConfig> configs;
  configs.reserve(values.size());
  for (double v : values) configs.push_back(apply_axis(base, axis, v));
  Study s;
  s.runs = runner.run_batch(configs);
  for (std::size_t i = 0; i < values.size(); ++i) {
    Aggregate a = aggregate(s.runs[i]);
    a.axis = axis;
    a.axis_value = values[i];
    s.rows.push_back(std::move(a));
  }
  return s;
}

Study validate_formulas(Runner& runner, const ExperimentConfig& base, const std::vector<int>& ks) {
  std::vector<double> values(ks.begin(), ks.end());
  return run_sweep(runner, base, "k", values);
}

Study ablation(Runner& runner, const ExperimentConfig& base, const std::vector<double>& bandwidths_mbps) {
  if (bandwidths_mbps.empty()) throw std::invalid_argument("bandwidth: ablation needs at least one value");
  std::vector<ExperimentConfig> configs;
  for (double bw : bandwidths_mbps) {
    ExperimentConfig c = apply_axis(base, "bandwidth", bw);
    c.mechanism = {Mechanism::kAutoRec, 0};
    configs.push_back(c);
    c.mechanism = {Mechanism::kAutoRecNoOpportunistic, 0};
    configs.push_back(c);
  }
  Study s;
  s.runs = runner.run_batch(configs);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    Aggregate a = aggregate(s.runs[i]);
    a.axis = "bandwidth";
    a.axis_value = bandwidths_mbps[i / 2];
    s.rows.push_back(std::move(a));
  }
  return s;
}

std::string csv_header() {
  return "row_type,mechanism,axis,axis_value,config_hash,seed,runs,lost_units,multi_attempt_units,"
         "recovery_latency_ms,recovery_latency_max_ms,recovery_latency_all_ms,deterioration_rate_pct,"
         "deterioration_rate_first_t_unit_pct,redundancy_cost_pct,goodput_mbps,goodput_reduction_pct,"
         "goodput_reduction_raw_pct,loss_rate_pct,t_unit_ms,off_mode_pct,delivered_min_pct,reinjections_count,"
         "opportunistic_reinjections_count,freeze_count_per_100s,freeze_duration_ms_per_100s,"
         "deadline_miss_rate_pct,formula_latency_ms,formula_cost_pct,formula_goodput_reduction_pct";
}

std::string csv_row(const Aggregate& a, std::optional<std::uint64_t> seed) {
  auto pct = [](double v) { return num(100.0 * v, 4); };
  auto opt_pct = [](const std::optional<double>& v) { return v ? num(100.0 * *v, 4) : std::string{}; };
  std::ostringstream os;
  os << (seed ? "run" : "aggregate") << ',' << a.mechanism << ',' << a.axis << ','
     << (a.axis.empty() ? std::string{} : num(a.axis_value, 4)) << ',' << hash_hex(a.config_hash) << ','
     << (seed ? std::to_string(*seed) : std::string{}) << ',' << a.runs << ',' << a.lost_units << ','
     << a.multi_attempt_units << ',' << opt_num(a.recovery_latency_ms, 3) << ','
     << opt_num(a.recovery_latency_max_ms, 3) << ',' << opt_num(a.recovery_latency_all_ms, 3) << ','
     << pct(a.deterioration_rate) << ',' << pct(a.deterioration_rate_first_t_unit) << ','
     << pct(a.redundancy_cost) << ',' << num(a.goodput_bps / 1e6, 6) << ',' << opt_pct(a.goodput_reduction)
     << ',' << opt_pct(a.goodput_reduction_raw) << ',' << pct(a.loss_rate) << ',' << opt_num(a.t_unit_ms, 3)
     << ',' << pct(a.off_mode_fraction) << ',' << pct(a.min_delivered_fraction) << ',' << a.reinjections << ','
     << a.reinjections_opportunistic << ',' << num(a.freeze_count_per_100s, 3) << ','
     << num(a.freeze_ms_per_100s, 3) << ',' << opt_pct(a.deadline_miss_rate) << ','
     << opt_num(a.formula_latency_ms, 3) << ',' << opt_pct(a.formula_cost) << ','
     << opt_pct(a.formula_goodput_reduction);
  return os.str();
}

std::string results_csv_body(const Study& study) {
  const auto& runs = study.runs;
  const auto& aggregates = study.rows;
  std::ostringstream os;
  os << csv_header() << '\n';
  for (std::size_t g = 0; g < runs.size(); ++g) {
    for (const auto& r : runs[g]) {
      Aggregate a = aggregate({r});
      if (g < aggregates.size()) {
        a.axis = aggregates[g].axis;
        a.axis_value = aggregates[g].axis_value;
      }
      os << csv_row(a, r.config.seed) << '\n';
    }
  }
  for (const auto& a : aggregates) os << csv_row(a) << '\n';
  return os.str();
}

void write_results_csv(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out << "# generated " << stamp << '\n' << body;
}

}  // namespace autorec
