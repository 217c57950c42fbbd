#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "autorec/adapter.h"

using namespace autorec;
using namespace std::chrono_literals;

namespace {

// Expected latency of a unit whose first retransmission (t = 0) was lost.
// Replicas leave at m*T/(K+1), m = 1..K. The last replica is the monitored
// attempt, so its loss is noticed one T later and plain retransmissions
// follow every T. Sums P(first success at attempt i) * send time of i.
double latency_by_enumeration(int k, double r, double t) {
  const double d = t / (k + 1);
  double expect = 0.0;
  double p_all_lost = 1.0;
  for (int i = 1; i < 20000 && p_all_lost > 1e-300; ++i) {
    const double at = i <= k ? i * d : k * d + (i - k) * t;
    expect += at * p_all_lost * (1.0 - r);
    p_all_lost *= r;
  }
  return expect;
}

// Expected wire packets per delivered unit on a saturated link: one initial
// send; on loss, a retransmission plus K replicas go out together and, if all
// K+1 are lost, single retransmissions repeat until one arrives.
double sends_by_enumeration(int k, double r) {
  double sends = 1.0 - r;  // delivered on the first try
  double p_all_lost = 1.0;
  for (int c = 0; c <= k; ++c) p_all_lost *= r;
  sends += r * (1.0 - p_all_lost) * (1 + 1 + k);
  double tail = r * p_all_lost;
  for (int n = 1; n < 20000 && tail > 1e-300; ++n) {
    sends += tail * (1.0 - r) * (1 + 1 + k + n);
    tail *= r;
  }
  return sends;
}

double goodput_reduction_by_enumeration(int k, double r) {
  return 1.0 - sends_by_enumeration(0, r) / sends_by_enumeration(k, r);
}

int scan_k_alpha(double r, Millis t, Millis alpha, int k_max) {
  for (int k = 0; k <= k_max; ++k) {
    if (f_recovery_latency(k, r, t).count() <= alpha.count() + kFeasibilityEpsilon) return k;
  }
  return k_max;
}
int scan_k_beta(double r, double beta, int k_max) {
  int best = 0;
  for (int k = 0; k <= k_max; ++k) {
    if (g_redundancy_cost(k, r) <= beta + kFeasibilityEpsilon) best = k;
  }
  return best;
}
int scan_k_gamma(double r, double gamma, int k_max) {
  int best = 0;
  for (int k = 0; k <= k_max; ++k) {
    if (h_goodput_reduction(k, r) <= gamma + kFeasibilityEpsilon) best = k;
  }
  return best;
}

}  // namespace

TEST(Formulas, HandEvaluatedExamples) {
  EXPECT_NEAR(f_recovery_latency(0, 0.05, Millis(60)).count(), 63.158, 5e-4);
  EXPECT_NEAR(f_recovery_latency(2, 0.5, Millis(100)).count(), 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(g_redundancy_cost(0, 0.3), 0.0);
  EXPECT_NEAR(g_redundancy_cost(6, 0.05), 0.30, 1e-12);
  EXPECT_NEAR(g_redundancy_cost(2, 0.10), 0.20, 1e-12);
  EXPECT_NEAR(h_goodput_reduction(1, 0.1), 1.0 - 1.0 / 1.081, 1e-12);
  EXPECT_NEAR(h_goodput_reduction(1, 0.1), 0.074931, 1e-6);
  EXPECT_NEAR(h_goodput_reduction(2, 0.05), 1.0 - 1.0 / 1.09250625, 1e-12);
  EXPECT_NEAR(h_goodput_reduction(2, 0.05), 0.08467, 1e-5);
}

TEST(Formulas, BoundaryIdentities) {
  for (double r : {0.01, 0.2, 0.5, 0.99}) {
    EXPECT_DOUBLE_EQ(g_redundancy_cost(0, r), 0.0);
    EXPECT_NEAR(h_goodput_reduction(0, r), 0.0, 1e-15);
    EXPECT_NEAR(f_recovery_latency(0, r, Millis(80)).count(), 80.0 / (1.0 - r), 1e-9);
  }
}

TEST(Formulas, SmallLossLimit) {
  const double r = 1e-9;
  for (int k = 1; k <= 10; ++k) {
    EXPECT_NEAR(f_recovery_latency(k, r, Millis(60)).count(), 60.0 / ((1.0 - r) * (1 + k)), 1e-6);
  }
}

TEST(Formulas, RejectOutOfDomain) {
  for (double r : {0.0, 1.0, -0.1, 1.5}) {
    EXPECT_THROW(f_recovery_latency(1, r, Millis(60)), std::domain_error);
    EXPECT_THROW(g_redundancy_cost(1, r), std::domain_error);
    EXPECT_THROW(h_goodput_reduction(1, r), std::domain_error);
  }
  EXPECT_THROW(f_recovery_latency(-1, 0.1, Millis(60)), std::domain_error);
}

TEST(Formulas, LatencyMatchesEnumeratedRecoveryProcess) {
  for (double r = 0.01; r < 0.95; r += 0.037) {
    for (int k = 0; k <= 10; ++k) {
      const double t = 73.0;
      EXPECT_NEAR(f_recovery_latency(k, r, Millis(t)).count(), latency_by_enumeration(k, r, t), 1e-7)
          << "k=" << k << " r=" << r;
    }
  }
}

TEST(Formulas, GoodputReductionMatchesEnumeratedSendCount) {
  for (double r = 0.01; r < 0.95; r += 0.037) {
    for (int k = 0; k <= 10; ++k) {
      EXPECT_NEAR(h_goodput_reduction(k, r), goodput_reduction_by_enumeration(k, r), 1e-9)
          << "k=" << k << " r=" << r;
    }
  }
}

TEST(Formulas, MonotoneOverGrid) {
  int violations = 0;
  for (int i = 1; i <= 99; ++i) {
    const double r = i / 100.0;
    for (int k = 0; k < 10; ++k) {
      if (f_recovery_latency(k + 1, r, Millis(60)) > f_recovery_latency(k, r, Millis(60))) ++violations;
      if (!(g_redundancy_cost(k + 1, r) > g_redundancy_cost(k, r))) ++violations;
      if (!(h_goodput_reduction(k + 1, r) > h_goodput_reduction(k, r))) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(KSearch, SpecExamples) {
  EXPECT_EQ(k_alpha(0.05, Millis(60), Millis(70), 10), 0);
  EXPECT_EQ(k_alpha(0.05, Millis(60), Millis(30), 10), scan_k_alpha(0.05, Millis(60), Millis(30), 10));
  EXPECT_EQ(k_alpha(0.05, Millis(60), Millis(30), 10), 2);
  EXPECT_EQ(k_alpha(0.5, Millis(100), Millis(0), 10), 10);
  EXPECT_EQ(k_beta(0.05, 0.30, 10), 6);
  EXPECT_EQ(k_beta(0.05, 0.0, 10), 0);
  EXPECT_EQ(k_beta(0.01, 0.30, 10), 10);
  EXPECT_EQ(k_gamma(0.05, 0.0, 10), 0);
  EXPECT_EQ(k_gamma(0.05, 1.0, 10), 10);
  EXPECT_EQ(k_gamma(0.05, 0.20, 10), scan_k_gamma(0.05, 0.20, 10));
}

TEST(KSearch, BinarySearchEqualsScanOnRandomTuples) {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> r_dist(1e-4, 0.999);
  std::uniform_real_distribution<double> t_dist(0.0, 500.0);
  std::uniform_real_distribution<double> alpha_dist(0.0, 600.0);
  std::uniform_real_distribution<double> frac(0.0, 1.2);
  std::uniform_int_distribution<int> kmax_dist(0, 10);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = r_dist(gen);
    const Millis t{t_dist(gen)};
    const Millis alpha{alpha_dist(gen)};
    const double beta = frac(gen);
    const double gamma = frac(gen);
    const int k_max = kmax_dist(gen);
    const int ka = k_alpha(r, t, alpha, k_max);
    const int kb = k_beta(r, beta, k_max);
    const int kg = k_gamma(r, gamma, k_max);
    if (ka != scan_k_alpha(r, t, alpha, k_max)) ++failures;
    if (kb != scan_k_beta(r, beta, k_max)) ++failures;
    if (kg != scan_k_gamma(r, gamma, k_max)) ++failures;
    if (kb != std::min(k_max, static_cast<int>(std::floor(beta / r + 1e-9)))) ++failures;

    const auto d = decide_k_theta(IntervalStats{0, 1000, 1, r, t}, Tolerances{alpha, beta, gamma}, k_max);
    if (d.k_theta != std::min({ka, kb, kg})) ++failures;
    if (d.k_theta < 0 || d.k_theta > k_max) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(DecideKTheta, ZeroLossGivesZero) {
  const auto d = decide_k_theta(IntervalStats::from_counts(3, 500, 0, Millis(60)), Tolerances{Millis(0), 1, 1}, 10);
  EXPECT_EQ(d.k_theta, 0);
}

TEST(DecideKTheta, TakesTheMinimum) {
  // At R = 5%, T = 60 ms: F(3) = 15.8 ms <= 18 ms < F(2) = 21.2 ms, G(6) = 0.30,
  // H(4) = 0.158 <= 0.17 < H(5) = 0.190.
  const auto d = decide_k_theta(IntervalStats{0, 100, 5, 0.05, Millis(60)}, Tolerances{Millis(18), 0.30, 0.17}, 10);
  EXPECT_EQ(d.k_alpha, 3);
  EXPECT_EQ(d.k_beta, 6);
  EXPECT_EQ(d.k_gamma, 4);
  EXPECT_EQ(d.k_theta, 3);
}

TEST(DecideKTheta, UnconstrainedOverheadHitsCap) {
  const auto d = decide_k_theta(IntervalStats{0, 100, 5, 0.05, Millis(63)}, Tolerances{Millis(0), 1.0, 1.0}, 10);
  EXPECT_EQ(d.k_alpha, 10);
  EXPECT_EQ(d.k_beta, 10);
  EXPECT_EQ(d.k_gamma, 10);
  EXPECT_EQ(d.k_theta, 10);
}

TEST(DecideKTheta, TotalLossStaysInRange) {
  const auto d = decide_k_theta(IntervalStats::from_counts(0, 10, 10, Millis(60)), Tolerances{}, 10);
  EXPECT_GE(d.k_theta, 0);
  EXPECT_LE(d.k_theta, 10);
}

TEST(IntervalStats, LossRateFromCounts) {
  const auto s = IntervalStats::from_counts(2, 200, 10, Millis(61));
  EXPECT_DOUBLE_EQ(s.loss_rate, 0.05);
  EXPECT_EQ(IntervalStats::from_counts(0, 0, 0, Millis(0)).loss_rate, 0.0);
}

TEST(Tolerances, ValidateNamesField) {
  try {
    Tolerances{Millis(-1), 0.3, 0.2}.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  EXPECT_THROW((Tolerances{Millis(30), -0.1, 0.2}.validate()), std::invalid_argument);
  EXPECT_THROW((Tolerances{Millis(30), 0.3, 1.5}.validate()), std::invalid_argument);
}

TEST(RedundancyAdapter, IntervalMeasurement) {
  RedundancyAdapter a(Tolerances{Millis(0), 0.30, 1.0}, 10, 5);
  EXPECT_FALSE(a.interval_started());
  a.begin_interval(at_us(1000), 60ms);
  ASSERT_TRUE(a.interval_end());
  EXPECT_EQ(*a.interval_end(), at_us(1000 + 300000));

  for (int i = 0; i < 95; ++i) a.on_packet_sent(AttemptKind::kInitial);
  for (int i = 0; i < 5; ++i) a.on_packet_sent(AttemptKind::kRetransmission);
  for (int i = 0; i < 40; ++i) a.on_packet_sent(AttemptKind::kReinjection);  // not counted
  for (int i = 0; i < 5; ++i) a.on_loss_detected(AttemptKind::kInitial);
  a.on_loss_detected(AttemptKind::kReinjection);  // not counted
  a.on_loss_detection_time(60ms);
  a.on_loss_detection_time(61ms);

  const auto s = a.close_interval();
  EXPECT_EQ(s.packets_sent, 100U);
  EXPECT_EQ(s.losses_detected, 5U);
  EXPECT_DOUBLE_EQ(s.loss_rate, 0.05);
  ASSERT_TRUE(a.t_unit());
  EXPECT_EQ(*a.t_unit(), Duration(60500us));
  EXPECT_EQ(a.k_theta(), 6);
  EXPECT_FALSE(a.interval_started());

  // A quiet interval keeps T_unit and drops K to zero.
  a.begin_interval(at_us(301000), 60ms);
  for (int i = 0; i < 50; ++i) a.on_packet_sent(AttemptKind::kInitial);
  const auto q = a.close_interval();
  EXPECT_EQ(q.interval_index, 1U);
  EXPECT_EQ(a.k_theta(), 0);
  EXPECT_EQ(*a.t_unit(), Duration(60500us));
}

TEST(RedundancyAdapter, FixedKIgnoresMeasurements) {
  RedundancyAdapter a(Tolerances{}, 10, 5, 4);
  EXPECT_EQ(a.k_theta(), 4);
  a.begin_interval(kSimStart, 60ms);
  a.close_interval();
  EXPECT_EQ(a.k_theta(), 4);
  EXPECT_THROW(RedundancyAdapter(Tolerances{}, 10, 5, 11), std::invalid_argument);
  EXPECT_THROW(RedundancyAdapter(Tolerances{}, 10, 0), std::invalid_argument);
}
