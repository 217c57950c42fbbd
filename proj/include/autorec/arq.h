#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "autorec/adapter.h"
#include "autorec/core.h"
#include "autorec/reinjection.h"
#include "autorec/trace.h"

namespace autorec {

// Rate limiter consulted before every transmission. Stands in for congestion
// control; implement this to plug in a different controller.
class SendBudget {
 public:
  virtual ~SendBudget() = default;
  // Consumes budget for `bytes` if available at `now`.
  virtual bool try_consume(SimTime now, std::uint32_t bytes) = 0;
  // Earliest time at which `bytes` can be sent.
  virtual SimTime next_available(SimTime now, std::uint32_t bytes) const = 0;
};

// Token bucket refilled at `rate_bps`, holding at most `capacity_bytes`.
// Tokens are kept as bits * 1e6 so refill over whole microseconds is exact.
class TokenBucketPacer final : public SendBudget {
 public:
  TokenBucketPacer(std::uint64_t rate_bps, std::uint32_t capacity_bytes = kMtuPayloadBytes);

  bool try_consume(SimTime now, std::uint32_t bytes) override;
  SimTime next_available(SimTime now, std::uint32_t bytes) const override;

 private:
  std::int64_t tokens_at(SimTime now) const;

  std::int64_t rate_bps_;
  std::int64_t capacity_;
  std::int64_t tokens_;
  SimTime last_;
};

// Receiver feedback for one delivered attempt.
struct AckRecord {
  AttemptId attempt;
  std::uint64_t cumulative_offset = 0;  // highest contiguous byte received + 1
  SimTime received_at;
};

inline constexpr int kFackThreshold = 3;
inline constexpr Duration kMinRto = std::chrono::milliseconds(200);
inline constexpr Duration kInitialRto = std::chrono::seconds(1);

// max(srtt + 4 * rttvar, 200 ms); 1 s before the first RTT sample.
Duration rto_for(const std::optional<RttEstimate>& rtt);

struct RecoveryConfig {
  // Off: plain ARQ, one retransmission per detected loss and nothing else.
  bool reinjection = false;
  bool opportunistic = true;
  Tolerances tolerances;
  int k_max = kDefaultKMax;
  int decision_interval_rtts = kDefaultDecisionIntervalRtts;
  std::optional<int> fixed_k;
};

// A wire packet handed to the link.
struct Outgoing {
  TransmissionAttempt attempt;
};

struct PollResult {
  std::vector<Outgoing> sent;
  // Size of the packet that was ready but did not fit the budget.
  std::optional<std::uint32_t> blocked_bytes;
};

// Sender side of one connection: send path, ACK processing, FACK/RTO loss
// detection with renumbered retransmission, and the AutoRec hooks.
// Writes send/retransmit/reinject/ack/loss_detect/mode/interval records.
class Sender {
 public:
  Sender(RecoveryConfig config, Trace& trace);

  void enqueue_frame(const Frame& frame, SimTime now);
  // Sends as many packets as the budget allows, highest priority first:
  // ARQ retransmissions, due opportunistic replicas, new data, then off-mode
  // replicas.
  PollResult poll_send(SimTime now, SendBudget& budget);
  void on_ack(const AckRecord& ack, SimTime now);
  // RTO expiry, decision-interval rollover and opportunistic deadlines.
  void on_timer(SimTime now);
  // Earliest pending timer, if any.
  std::optional<SimTime> next_timer() const;

  bool all_acked() const { return acked_units_ == units_.size() && send_queue_.empty(); }
  std::size_t units_enqueued() const { return units_.size(); }
  std::size_t units_acked() const { return acked_units_; }
  SenderMode mode() const { return mode_; }
  const std::optional<RttEstimate>& rtt() const { return rtt_; }
  const RedundancyAdapter& adapter() const { return adapter_; }
  const ReinjectionController& controller() const { return controller_; }
  // Monitored (latest, unacked, not yet judged lost) attempt of a data unit.
  std::optional<AttemptId> monitored_attempt(DataId data) const;
  std::size_t monitored_count() const { return monitored_.size(); }

 private:
  struct UnitState {
    DataUnit unit;
    AttemptId latest;
    SimTime first_sent;
    bool sent = false;
    bool acked = false;
    bool retransmitted = false;
    bool awaiting_retransmission = false;
  };
  struct AttemptInfo {
    std::uint32_t seq = 0;
    AttemptKind kind = AttemptKind::kInitial;
    SimTime sent_at;
    SimTime rto_deadline;
  };
  struct PendingRetransmission {
    std::uint32_t seq = 0;
    AttemptId lost;
  };

  TransmissionAttempt transmit(UnitState& u, AttemptKind kind, SimTime now);
  void judge_lost(AttemptId id, rec::LossCause cause, SimTime now);
  void unmonitor(AttemptId id);
  void roll_intervals(SimTime now);
  void note_mode(SimTime now);
  UnitState& unit_of(DataId data);

  RecoveryConfig config_;
  Trace& trace_;
  RedundancyAdapter adapter_;
  ReinjectionController controller_;

  std::vector<UnitState> units_;  // indexed by DataUnit::seq
  std::unordered_map<DataId, std::uint32_t> seq_of_;
  std::deque<std::uint32_t> send_queue_;
  std::deque<PendingRetransmission> retransmit_queue_;
  std::vector<AttemptInfo> attempts_;  // indexed by AttemptId::value
  std::map<AttemptId, std::uint32_t> monitored_;  // attempt -> seq
  std::set<std::pair<SimTime, AttemptId>> rto_timers_;
  std::uint64_t top_acked_[kFackThreshold] = {};  // largest acked ids + 1, descending
  std::size_t acked_units_ = 0;
  std::optional<RttEstimate> rtt_;
  SenderMode mode_ = SenderMode::kOff;
};

}  // namespace autorec
