#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "autorec/core.h"
#include "autorec/trace.h"

namespace autorec {

// Per-unit recovery record for data that saw at least one loss detection.
struct LostUnit {
  DataId data;
  SimTime first_retransmit;
  AttemptId first_retransmit_attempt;
  Duration t_unit{};  // send to first retransmission
  // Shortest loss-detection round seen by this unit: retransmission send time
  // minus the send time of the attempt judged lost.
  Duration shortest_round{};
  std::uint32_t recovery_attempts = 0;  // retransmissions + reinjections sent
  bool first_retransmit_delivered = false;
  // Absent when no recovery attempt was delivered before the trace ended.
  std::optional<Duration> latency;
};

// Indexed view of a trace. Build once, query many times.
class TraceIndex {
 public:
  explicit TraceIndex(const Trace& trace);

  struct AttemptRow {
    DataId data;
    AttemptKind kind = AttemptKind::kInitial;
    SimTime sent_at;
    std::optional<SimTime> delivered_at;
    bool dropped = false;
  };
  struct FrameRow {
    FrameId id;
    SimTime generated_at;
    std::optional<SimTime> deadline;
    std::optional<SimTime> completed_at;  // all units delivered
    std::uint64_t bytes = 0;
  };

  const std::vector<AttemptRow>& attempts() const { return attempts_; }
  const std::vector<FrameRow>& frames() const { return frames_; }
  const std::vector<LostUnit>& lost_units() const { return lost_; }
  const LostUnit* lost_unit(DataId data) const;
  // Earliest delivery of any attempt carrying `data`.
  std::optional<SimTime> first_delivery(DataId data) const;
  std::uint64_t units_generated() const { return units_generated_; }
  std::uint64_t units_delivered() const { return first_delivery_.size(); }
  std::uint64_t bytes_generated() const { return bytes_generated_; }
  std::uint64_t count(AttemptKind kind) const { return counts_[static_cast<int>(kind)]; }
  std::uint64_t drops() const { return drops_; }
  std::uint64_t reinjections_opportunistic() const { return reinject_opp_; }
  SimTime end() const { return end_; }
  // Time spent in off-mode within [0, until]. The sender starts in off-mode.
  Duration off_mode_time(SimTime until) const;
  // Mean of the first-retransmission samples.
  std::optional<Duration> mean_t_unit() const;
  // Bytes of distinct data first delivered at or before `until`.
  std::uint64_t distinct_bytes_delivered(SimTime until) const;

 private:
  std::vector<AttemptRow> attempts_;
  std::vector<FrameRow> frames_;
  std::vector<LostUnit> lost_;
  std::unordered_map<DataId, std::size_t> lost_index_;
  std::unordered_map<DataId, std::pair<SimTime, std::uint32_t>> first_delivery_;  // time, bytes
  std::uint64_t units_generated_ = 0;
  std::uint64_t bytes_generated_ = 0;
  std::uint64_t counts_[3] = {};
  std::uint64_t drops_ = 0;
  std::uint64_t reinject_opp_ = 0;
  std::int64_t t_unit_sum_ = 0;
  std::uint64_t t_unit_samples_ = 0;
  SimTime end_;
  std::vector<std::pair<SimTime, SenderMode>> mode_changes_;
};

// Send time of the first eventually-delivered recovery attempt minus the first
// retransmission time; nullopt for data never judged lost or never recovered.
std::optional<Duration> recovery_latency(const TraceIndex& idx, DataId data);

// Fraction of recovered lost units whose recovery latency reaches one loss
// detection round (the unit's shortest observed round); 0 without losses.
double deterioration_rate(const TraceIndex& idx);
// Same with the unit's own first detection delay as the yardstick.
double deterioration_rate_first_t_unit(const TraceIndex& idx);

// Reinjected replicas per originally sent packet.
double redundancy_cost(const TraceIndex& idx);

// Distinct application bits per second delivered within [0, window].
double goodput_bps(const TraceIndex& idx, Duration window);

struct GoodputReduction {
  double raw = 0.0;       // 1 - autorec / baseline, may be negative
  double reported = 0.0;  // floored at 0
};
// Pairing key of a run: config hash (mechanism excluded) plus seed.
struct PairKey {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const PairKey&, const PairKey&) = default;
};
// Throws std::invalid_argument when the keys differ or the baseline is zero.
GoodputReduction goodput_reduction(double autorec_bps, PairKey autorec_key, double baseline_bps,
                                   PairKey baseline_key);

struct QoEStats {
  double freeze_count_per_100s = 0.0;
  double freeze_ms_per_100s = 0.0;
  std::optional<double> deadline_miss_rate;  // only when frames carry deadlines
};

// Player model: playout starts `startup_buffer` after the first frame and
// keeps the source cadence; a frame incomplete at its playout instant
// freezes playback until it completes. Normalized by `span`.
QoEStats freezing(const TraceIndex& idx, Duration startup_buffer, Duration span);

struct LatencyStats {
  std::uint64_t lost_units = 0;
  std::uint64_t recovered_units = 0;
  std::uint64_t multi_attempt_units = 0;  // first retransmission dropped
  // Mean and max over units whose first retransmission was dropped.
  std::optional<double> mean_ms;
  std::optional<double> max_ms;
  // Mean over every recovered lost unit, zeros included.
  std::optional<double> mean_all_ms;
  // Running sums for pooling across runs.
  double sum_ms = 0.0;
  double sum_all_ms = 0.0;
  std::uint64_t deteriorated = 0;
  std::uint64_t deteriorated_first_t_unit = 0;
};
LatencyStats latency_stats(const TraceIndex& idx);

// Every per-run number reported by the harness.
struct RunMetrics {
  LatencyStats latency;
  double deterioration_rate = 0.0;
  double deterioration_rate_first_t_unit = 0.0;
  double redundancy_cost = 0.0;
  double goodput_bps = 0.0;
  double loss_rate = 0.0;  // dropped / transmitted packets
  std::optional<double> mean_t_unit_ms;
  double off_mode_fraction = 0.0;
  double delivered_fraction = 0.0;  // distinct units delivered / generated
  std::uint64_t initials = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t reinjections = 0;
  std::uint64_t reinjections_opportunistic = 0;
  QoEStats qoe;
};

// `traffic_duration` is the goodput window and QoE normalization span.
RunMetrics compute_metrics(const Trace& trace, Duration traffic_duration, Duration startup_buffer);

}  // namespace autorec
