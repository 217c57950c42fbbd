#pragma once

#include <cstdint>
#include <optional>

#include "autorec/core.h"

namespace autorec {

// User-facing limits on what replica injection may cost and what it must buy.
struct Tolerances {
  Millis alpha{30.0};  // recovery latency tolerance
  double beta = 0.30;  // redundancy cost tolerance, fraction
  double gamma = 0.20; // goodput reduction tolerance, fraction

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

inline constexpr int kDefaultKMax = 10;
inline constexpr int kDefaultDecisionIntervalRtts = 5;

// Slack applied to every "value <= tolerance" test so that products such as
// 6 * 0.05 compare equal to 0.30.
inline constexpr double kFeasibilityEpsilon = 1e-9;

// Expected recovery latency of lost data whose first retransmission is lost,
// with K replicas spread evenly across one loss-detection time.
// Throws std::domain_error unless 0 < r < 1 and k >= 0.
Millis f_recovery_latency(int k, double r, Millis t_unit);

// Expected replicas per originally sent packet.
double g_redundancy_cost(int k, double r);

// Expected relative goodput loss of a saturated sender injecting K replicas.
double h_goodput_reduction(int k, double r);

// Smallest K in [0, k_max] with F(K) <= alpha; k_max when none qualifies.
int k_alpha(double r, Millis t_unit, Millis alpha, int k_max);
// Largest K in [0, k_max] with G(K) <= beta.
int k_beta(double r, double beta, int k_max);
// Largest K in [0, k_max] with H(K) <= gamma.
int k_gamma(double r, double gamma, int k_max);

struct IntervalStats {
  std::uint64_t interval_index = 0;
  std::uint64_t packets_sent = 0;
  std::uint64_t losses_detected = 0;
  double loss_rate = 0.0;
  Millis avg_loss_detection_time{0.0};

  // Builds stats with loss_rate derived from the counts (0 when nothing sent).
  static IntervalStats from_counts(std::uint64_t index, std::uint64_t sent,
                                   std::uint64_t losses, Millis t_unit);
};

struct RedundancyDecision {
  int k_alpha = 0;
  int k_beta = 0;
  int k_gamma = 0;
  int k_theta = 0;
};

// min{K_alpha, K_beta, K_gamma}, or all zeros when the interval saw no loss.
// Loss rates at or above 1 are evaluated just below 1.
RedundancyDecision decide_k_theta(const IntervalStats& stats, const Tolerances& tolerances,
                                  int k_max);

// Per-connection measurement state and the redundancy level currently in
// force. Owned by the sender; not thread-safe.
class RedundancyAdapter {
 public:
  RedundancyAdapter(Tolerances tolerances, int k_max, int decision_interval_rtts,
                    std::optional<int> fixed_k = std::nullopt);

  // Counts a wire transmission toward the interval loss-rate denominator.
  // Reinjected replicas are not counted.
  void on_packet_sent(AttemptKind kind);
  void on_loss_detected(AttemptKind lost_kind);
  // Sample of send-to-first-retransmission time.
  void on_loss_detection_time(Duration sample);

  bool interval_started() const { return interval_end_.has_value(); }
  std::optional<SimTime> interval_end() const { return interval_end_; }
  // Opens a new interval lasting D * srtt from `now`.
  void begin_interval(SimTime now, Duration srtt);
  // Closes the current interval, refreshes K_theta and T_unit, and returns
  // the measured stats.
  IntervalStats close_interval();

  int k_theta() const { return decision_.k_theta; }
  const RedundancyDecision& decision() const { return decision_; }
  // Average loss detection time from the most recent interval that saw one.
  std::optional<Duration> t_unit() const { return t_unit_; }
  const Tolerances& tolerances() const { return tolerances_; }
  int k_max() const { return k_max_; }
  std::optional<int> fixed_k() const { return fixed_k_; }

 private:
  Tolerances tolerances_;
  int k_max_;
  int decision_interval_rtts_;
  std::optional<int> fixed_k_;

  RedundancyDecision decision_;
  std::optional<Duration> t_unit_;
  std::optional<SimTime> interval_end_;
  std::uint64_t interval_index_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t losses_ = 0;
  std::int64_t detection_sum_us_ = 0;
  std::uint64_t detection_samples_ = 0;
};

}  // namespace autorec
