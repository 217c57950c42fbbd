#include "autorec/adapter.h"

#include <algorithm>
#include <cmath>
#include <ranges>
#include <stdexcept>
#include <string>

namespace autorec {
namespace {

void require_open_unit(double r) {
  if (!(r > 0.0 && r < 1.0)) {
    throw std::domain_error("loss rate must lie in (0, 1), got " + std::to_string(r));
  }
}

void require_level(int k) {
  if (k < 0) throw std::domain_error("redundancy level must be non-negative");
}

auto levels(int k_max) { return std::views::iota(0, std::max(k_max, 0) + 1); }

}  // namespace

void Tolerances::validate() const {
  if (!(alpha.count() >= 0.0)) throw std::invalid_argument("alpha_ms must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
}

Millis f_recovery_latency(int k, double r, Millis t_unit) {
  require_level(k);
  require_open_unit(r);
  const double num = 1.0 + k * std::pow(r, k);
  const double den = (1.0 - r) * (1.0 + k);
  return t_unit * (num / den);
}

double g_redundancy_cost(int k, double r) {
  require_level(k);
  require_open_unit(r);
  return k * r;
}

double h_goodput_reduction(int k, double r) {
  require_level(k);
  require_open_unit(r);
  const double den = 1.0 + k * r - (1.0 + k) * r * r + std::pow(r, k + 2);
  return 1.0 - 1.0 / den;
}

// The searches below rely on F being non-increasing and G, H increasing in K,
// so each feasibility predicate flips at most once over [0, k_max].

int k_alpha(double r, Millis t_unit, Millis alpha, int k_max) {
  require_open_unit(r);
  auto ks = levels(k_max);
  auto it = std::ranges::partition_point(ks, [&](int k) {
    return f_recovery_latency(k, r, t_unit).count() > alpha.count() + kFeasibilityEpsilon;
  });
  return it == ks.end() ? std::max(k_max, 0) : *it;
}

int k_beta(double r, double beta, int k_max) {
  require_open_unit(r);
  auto ks = levels(k_max);
  auto it = std::ranges::partition_point(
      ks, [&](int k) { return g_redundancy_cost(k, r) <= beta + kFeasibilityEpsilon; });
  return std::max(0, *std::ranges::prev(it));
}

int k_gamma(double r, double gamma, int k_max) {
  require_open_unit(r);
  auto ks = levels(k_max);
  auto it = std::ranges::partition_point(
      ks, [&](int k) { return h_goodput_reduction(k, r) <= gamma + kFeasibilityEpsilon; });
  return std::max(0, *std::ranges::prev(it));
}

IntervalStats IntervalStats::from_counts(std::uint64_t index, std::uint64_t sent,
                                         std::uint64_t losses, Millis t_unit) {
  IntervalStats s;
  s.interval_index = index;
  s.packets_sent = sent;
  s.losses_detected = losses;
  s.loss_rate = sent > 0 ? static_cast<double>(losses) / static_cast<double>(sent) : 0.0;
  s.avg_loss_detection_time = t_unit;
  return s;
}

RedundancyDecision decide_k_theta(const IntervalStats& stats, const Tolerances& tolerances,
                                  int k_max) {
  if (stats.loss_rate <= 0.0) return {};
  // Losses detected in an interval can belong to packets sent in the
  // previous one, so tiny intervals may report R >= 1.
  const double r = std::min(stats.loss_rate, 1.0 - 1e-6);
  RedundancyDecision d;
  d.k_alpha = k_alpha(r, stats.avg_loss_detection_time, tolerances.alpha, k_max);
  d.k_beta = k_beta(r, tolerances.beta, k_max);
  d.k_gamma = k_gamma(r, tolerances.gamma, k_max);
  d.k_theta = std::min({d.k_alpha, d.k_beta, d.k_gamma});
  return d;
}

RedundancyAdapter::RedundancyAdapter(Tolerances tolerances, int k_max,
                                     int decision_interval_rtts, std::optional<int> fixed_k)
    : tolerances_(tolerances),
      k_max_(k_max),
      decision_interval_rtts_(decision_interval_rtts),
      fixed_k_(fixed_k) {
  tolerances_.validate();
  if (k_max_ < 0) throw std::invalid_argument("k_max must be >= 0");
  if (decision_interval_rtts_ < 1) throw std::invalid_argument("decision_interval_rtts must be >= 1");
  if (fixed_k_ && (*fixed_k_ < 0 || *fixed_k_ > k_max_)) {
    throw std::invalid_argument("fixed K must lie in [0, k_max]");
  }
  if (fixed_k_) decision_ = {*fixed_k_, *fixed_k_, *fixed_k_, *fixed_k_};
}

void RedundancyAdapter::on_packet_sent(AttemptKind kind) {
  if (kind != AttemptKind::kReinjection) ++sent_;
}

void RedundancyAdapter::on_loss_detected(AttemptKind lost_kind) {
  if (lost_kind != AttemptKind::kReinjection) ++losses_;
}

void RedundancyAdapter::on_loss_detection_time(Duration sample) {
  detection_sum_us_ += sample.count();
  ++detection_samples_;
}

void RedundancyAdapter::begin_interval(SimTime now, Duration srtt) {
  interval_end_ = now + srtt * decision_interval_rtts_;
}

IntervalStats RedundancyAdapter::close_interval() {
  if (detection_samples_ > 0) {
    const auto n = static_cast<std::int64_t>(detection_samples_);
    t_unit_ = Duration{(detection_sum_us_ + n / 2) / n};
  }
  const Millis t_unit = t_unit_ ? Millis{*t_unit_} : Millis{0.0};
  auto stats = IntervalStats::from_counts(interval_index_++, sent_, losses_, t_unit);
  if (!fixed_k_) decision_ = decide_k_theta(stats, tolerances_, k_max_);
  sent_ = losses_ = 0;
  detection_sum_us_ = 0;
  detection_samples_ = 0;
  interval_end_.reset();
  return stats;
}

}  // namespace autorec
