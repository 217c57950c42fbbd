// Acceptance checks. Prints one PASS/FAIL line per criterion, preceded by
// indented detail lines, and exits non-zero when any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "autorec/experiment.h"
#include "autorec/netsim.h"

using namespace autorec;
using namespace std::chrono_literals;

namespace {

int g_reps = 100;
Duration g_duration = 60s;

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  std::fputs("    ", stdout);
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::fputc('\n', stdout);
}

double pct(double v) { return 100.0 * v; }

ExperimentConfig basic() {
  ExperimentConfig c;
  c.link.bandwidth_bps = 12'000'000;
  c.link.rtt = 60ms;
  c.link.loss = BernoulliLoss{0.05};
  c.traffic.duration = g_duration;
  c.replications = g_reps;
  c.seed = 1;
  return c;
}

// All on-mode: bitrate equals bandwidth.
ExperimentConfig saturated() {
  ExperimentConfig c = basic();
  c.traffic.bitrate_bps = 12'000'000;
  return c;
}

// Closed forms, written out here so the adapter is checked against an
// independent transcription.
double oracle_f(int k, double r, double t) {
  return (1.0 + k * std::pow(r, k)) / ((1.0 - r) * (1.0 + k)) * t;
}
double oracle_g(int k, double r) { return k * r; }
double oracle_h(int k, double r) {
  return 1.0 - 1.0 / (1.0 + k * r - (1.0 + k) * r * r + std::pow(r, k + 2));
}

bool formula_accuracy(Runner& runner) {
  const double r = 0.05;
  const Study s = validate_formulas(runner, saturated(), {0, 1, 2, 3, 4, 5, 6});
  bool ok = true;
  for (const auto& row : s.rows) {
    const int k = static_cast<int>(row.axis_value);
    const double t = row.t_unit_ms.value_or(0.0);
    const double f = oracle_f(k, r, t);
    const double lat = row.recovery_latency_ms.value_or(0.0);
    const double lat_tol = std::max(5.0, 0.15 * f);
    const double gr = row.goodput_reduction.value_or(0.0);
    const bool row_ok = std::abs(lat - f) <= lat_tol && std::abs(row.redundancy_cost - oracle_g(k, r)) <= 0.03 &&
                        std::abs(gr - oracle_h(k, r)) <= 0.03;
    detail("K=%d T_unit=%.2fms latency %.2f vs F %.2f (tol %.2f) | cost %.2f%% vs G %.2f%% | "
           "goodput reduction %.2f%% vs H %.2f%% | measured loss %.3f%% %s",
           k, t, lat, f, lat_tol, pct(row.redundancy_cost), pct(oracle_g(k, r)), pct(gr), pct(oracle_h(k, r)),
           pct(row.loss_rate), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }
  return ok;
}

bool alpha_sensitivity(Runner& runner) {
  ExperimentConfig base = saturated();
  base.tolerances = Tolerances{Millis{0}, 1.0, 1.0};
  std::vector<double> alphas;
  for (int a = 10; a <= 200; a += 10) alphas.push_back(a);
  const Study s = run_sweep(runner, base, "alpha", alphas);
  bool ok = true;
  for (const auto& row : s.rows) {
    const double lat = row.recovery_latency_ms.value_or(0.0);
    const double gr = row.goodput_reduction.value_or(0.0);
    bool row_ok = lat <= row.axis_value + 5.0;
    if (row.axis_value >= 100.0) row_ok = row_ok && row.redundancy_cost < 0.02 && gr < 0.02;
    detail("alpha=%3.0fms latency %.2fms cost %.2f%% goodput reduction %.2f%% %s", row.axis_value, lat,
           pct(row.redundancy_cost), pct(gr), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }
  return ok;
}

bool hard_caps(Runner& runner) {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.05 * i);
  bool ok = true;

  ExperimentConfig beta_base = saturated();
  beta_base.tolerances = Tolerances{Millis{0}, 0.0, 1.0};
  for (const auto& row : run_sweep(runner, beta_base, "beta", grid).rows) {
    const bool row_ok = row.redundancy_cost <= row.axis_value + 0.01;
    detail("beta=%.2f cost %.2f%% (cap %.2f%%) latency %.2fms %s", row.axis_value, pct(row.redundancy_cost),
           pct(row.axis_value + 0.01), row.recovery_latency_ms.value_or(0.0), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }

  ExperimentConfig gamma_base = saturated();
  gamma_base.tolerances = Tolerances{Millis{0}, 1.0, 0.0};
  for (const auto& row : run_sweep(runner, gamma_base, "gamma", grid).rows) {
    const double gr = row.goodput_reduction.value_or(0.0);
    const bool row_ok = gr <= row.axis_value + 0.01;
    detail("gamma=%.2f goodput reduction %.2f%% (cap %.2f%%) cost %.2f%% %s", row.axis_value, pct(gr),
           pct(row.axis_value + 0.01), pct(row.redundancy_cost), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }
  return ok;
}

bool opportunistic_ablation(Runner& runner) {
  ExperimentConfig base = basic();
  base.traffic.bitrate_bps = 4'000'000;
  const Study s = ablation(runner, base, {2, 3, 4, 8, 10, 12});
  bool ok = true;
  for (std::size_t i = 0; i + 1 < s.rows.size(); i += 2) {
    const Aggregate& full = s.rows[i];
    const Aggregate& variant = s.rows[i + 1];
    const double bw = full.axis_value;
    const double lat_full = full.recovery_latency_ms.value_or(0.0);
    const double lat_var = variant.recovery_latency_ms.value_or(0.0);
    bool row_ok = true;
    if (bw <= 4.0) {
      row_ok = variant.redundancy_cost < 0.01 && full.deterioration_rate < 0.01 && lat_full < lat_var;
    } else {
      row_ok = full.deterioration_rate < 0.01 && variant.deterioration_rate < 0.01 && lat_full <= lat_var;
    }
    detail("bw=%4.1fMbps full: latency %.2fms det %.3f%% cost %.2f%% | no-opportunistic: latency %.2fms "
           "det %.3f%% cost %.2f%% %s",
           bw, lat_full, pct(full.deterioration_rate), pct(full.redundancy_cost), lat_var,
           pct(variant.deterioration_rate), pct(variant.redundancy_cost), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }
  return ok;
}

bool adapter_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> loss(1e-4, 0.95), t_unit(1.0, 500.0), alpha(0.0, 300.0), frac(0.0, 1.0);
  const int k_max = kDefaultKMax;
  const double eps = kFeasibilityEpsilon;
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = loss(rng), t = t_unit(rng), a = alpha(rng), b = frac(rng), g = frac(rng);
    int ka = k_max;
    for (int k = 0; k <= k_max; ++k) {
      if (oracle_f(k, r, t) <= a + eps) {
        ka = k;
        break;
      }
    }
    int kb = 0, kg = 0;
    for (int k = 0; k <= k_max; ++k) {
      if (oracle_g(k, r) <= b + eps) kb = k;
      if (oracle_h(k, r) <= g + eps) kg = k;
    }
    const Tolerances tol{Millis{a}, b, g};
    IntervalStats st;
    st.packets_sent = 1000;
    st.losses_detected = 1;
    st.loss_rate = r;
    st.avg_loss_detection_time = Millis{t};
    const RedundancyDecision d = decide_k_theta(st, tol, k_max);
    const bool same = k_alpha(r, Millis{t}, Millis{a}, k_max) == ka && k_beta(r, b, k_max) == kb &&
                      k_gamma(r, g, k_max) == kg && d.k_alpha == ka && d.k_beta == kb && d.k_gamma == kg &&
                      d.k_theta == std::min({ka, kb, kg});
    if (!same) {
      ++failures;
      if (failures <= 5) {
        detail("mismatch R=%.6f T=%.3f alpha=%.3f beta=%.4f gamma=%.4f: want (%d,%d,%d) got (%d,%d,%d,%d)", r, t, a,
               b, g, ka, kb, kg, d.k_alpha, d.k_beta, d.k_gamma, d.k_theta);
      }
    }
    const IntervalStats quiet = IntervalStats::from_counts(0, 1000, 0, Millis{t});
    if (decide_k_theta(quiet, tol, k_max).k_theta != 0) ++failures;
  }
  detail("1000 random tuples, %d failures", failures);
  return failures == 0;
}

bool monotonicity() {
  int violations = 0;
  for (int i = 1; i <= 99; ++i) {
    const double r = i / 100.0;
    for (int k = 0; k < kDefaultKMax; ++k) {
      if (f_recovery_latency(k + 1, r, Millis{60}) > f_recovery_latency(k, r, Millis{60})) ++violations;
      if (!(g_redundancy_cost(k + 1, r) > g_redundancy_cost(k, r))) ++violations;
      if (!(h_goodput_reduction(k + 1, r) > h_goodput_reduction(k, r))) ++violations;
    }
  }
  detail("99 loss rates x K in [0, %d], %d violations", kDefaultKMax, violations);
  return violations == 0;
}

bool baseline_sanity(Runner& runner) {
  bool ok = true;
  for (double p : {0.01, 0.05, 0.10}) {
    ExperimentConfig c = basic();
    c.mechanism = parse_mechanism("baseline");
    c.link.loss = BernoulliLoss{p};
    const Aggregate a = aggregate(runner.run_replications(c));
    const bool row_ok =
        std::abs(a.deterioration_rate - p) <= 0.01 && a.reinjections == 0 && a.min_delivered_fraction == 1.0;
    detail("p=%.0f%% deterioration %.3f%% reinjections %llu min delivered %.4f%% lost units %llu %s", pct(p),
           pct(a.deterioration_rate), static_cast<unsigned long long>(a.reinjections), pct(a.min_delivered_fraction),
           static_cast<unsigned long long>(a.lost_units), row_ok ? "ok" : "MISS");
    ok = ok && row_ok;
  }
  return ok;
}

bool gilbert_elliott(Runner& runner) {
  ExperimentConfig c = basic();
  c.link.loss = GilbertElliottLoss{0.01, 0.10, 0.20, 0.80, 30ms};
  c.tolerances = Tolerances{Millis{0}, 0.20, 0.20};
  c.playback_deadline = 100ms;
  const double stationary = stationary_loss_rate(c.link.loss);

  ExperimentConfig b = c;
  b.mechanism = parse_mechanism("baseline");
  const auto base_runs = runner.run_replications(b);
  const auto auto_runs = runner.run_replications(c);
  const Aggregate base = aggregate(base_runs);
  const Aggregate ar = aggregate(auto_runs);

  int seeds_better = 0;
  for (std::size_t i = 0; i < base_runs.size(); ++i) {
    if (auto_runs[i].metrics.deterioration_rate <= base_runs[i].metrics.deterioration_rate) ++seeds_better;
  }
  const bool det_ok = ar.deterioration_rate < base.deterioration_rate;
  const bool loss_ok =
      std::abs(base.loss_rate - stationary) <= 0.005 && std::abs(ar.loss_rate - stationary) <= 0.005;
  detail("deterioration autorec %.3f%% vs baseline %.3f%% (autorec no worse on %d of %zu seeds)",
         pct(ar.deterioration_rate), pct(base.deterioration_rate), seeds_better, base_runs.size());
  detail("loss rate baseline %.3f%% autorec %.3f%% stationary %.3f%%", pct(base.loss_rate), pct(ar.loss_rate),
         pct(stationary));
  detail("trend only: deadline miss %.3f%% -> %.3f%%, freezes/100s %.3f -> %.3f, freeze ms/100s %.1f -> %.1f",
         pct(base.deadline_miss_rate.value_or(0.0)), pct(ar.deadline_miss_rate.value_or(0.0)),
         base.freeze_count_per_100s, ar.freeze_count_per_100s, base.freeze_ms_per_100s, ar.freeze_ms_per_100s);
  return det_ok && loss_ok;
}

bool determinism() {
  bool ok = true;
  int cases = 0;
  for (const char* mech : {"baseline", "autorec", "autorec-no-opportunistic", "fixed-k:3"}) {
    for (int model = 0; model < 2; ++model) {
      ExperimentConfig c = basic();
      c.traffic.duration = 10s;
      c.mechanism = parse_mechanism(mech);
      c.seed = 7;
      c.replications = 2;
      if (model == 1) c.link.loss = GilbertElliottLoss{};
      const RunResult a = Runner::run_single(c, true);
      const RunResult b = Runner::run_single(c, true);
      const bool trace_same = a.trace_text == b.trace_text;

      Runner r1({1, false, true});
      Runner r2({2, false, true});
      const Study s1{r1.run_batch({c}), {}};
      const Study s2{r2.run_batch({c}), {}};
      const bool csv_same = results_csv_body(s1) == results_csv_body(s2) &&
                            csv_row(aggregate({a}), c.seed) == csv_row(aggregate({b}), c.seed);
      if (!trace_same || !csv_same) {
        detail("%s model %d: trace %s, csv %s", mech, model, trace_same ? "same" : "DIFFERS",
               csv_same ? "same" : "DIFFERS");
      }
      ok = ok && trace_same && csv_same;
      ++cases;
    }
  }
  detail("%d (config, seed) pairs, each run twice", cases);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::set<int> only;
  double duration_s = 60.0;
  app.add_option("--reps", g_reps, "Replications per configuration")->check(CLI::PositiveNumber);
  app.add_option("--duration", duration_s, "Seconds of traffic per run")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  g_duration = std::chrono::duration_cast<Duration>(std::chrono::duration<double>(duration_s));

  Runner runner;
  struct Criterion {
    int id;
    const char* name;
    std::function<bool()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "formula accuracy, fixed K in 0..6", [&] { return formula_accuracy(runner); }},
      {2, "alpha sensitivity", [&] { return alpha_sensitivity(runner); }},
      {3, "beta/gamma hard caps", [&] { return hard_caps(runner); }},
      {4, "opportunistic reinjection ablation", [&] { return opportunistic_ablation(runner); }},
      {5, "adapter oracle equivalence", adapter_oracle},
      {6, "formula monotonicity", monotonicity},
      {7, "baseline sanity", [&] { return baseline_sanity(runner); }},
      {8, "Gilbert-Elliott robustness", [&] { return gilbert_elliott(runner); }},
      {9, "determinism", determinism},
  };

  std::printf("replications %d, %.0f s per run\n", g_reps, duration_s);
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    try {
      pass = c.check();
    } catch (const std::exception& e) {
      detail("error: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", c.id, c.name, secs);
    std::fflush(stdout);
    failed += pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
