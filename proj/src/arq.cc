#include "autorec/arq.h"

#include <algorithm>
#include <stdexcept>

namespace autorec {
namespace {

constexpr std::int64_t kTokenScale = 1'000'000;  // tokens are bits * 1e6

}  // namespace

TokenBucketPacer::TokenBucketPacer(std::uint64_t rate_bps, std::uint32_t capacity_bytes)
    : rate_bps_(static_cast<std::int64_t>(rate_bps)),
      capacity_(static_cast<std::int64_t>(capacity_bytes) * 8 * kTokenScale),
      tokens_(capacity_),
      last_(kSimStart) {
  if (rate_bps == 0) throw std::invalid_argument("pacing rate must be positive");
  if (capacity_bytes == 0) throw std::invalid_argument("bucket capacity must be positive");
}

std::int64_t TokenBucketPacer::tokens_at(SimTime now) const {
  const std::int64_t dt = std::max<std::int64_t>(0, (now - last_).count());
  // Guard the multiplication: a full bucket needs at most capacity / rate us.
  if (dt >= capacity_ / rate_bps_ + 1) return capacity_;
  return std::min(capacity_, tokens_ + dt * rate_bps_);
}

bool TokenBucketPacer::try_consume(SimTime now, std::uint32_t bytes) {
  // A packet larger than the bucket drains a full bucket.
  const std::int64_t cost = std::min(capacity_, static_cast<std::int64_t>(bytes) * 8 * kTokenScale);
  const std::int64_t have = tokens_at(now);
  if (now > last_) last_ = now;
  tokens_ = have;
  if (have < cost) return false;
  tokens_ -= cost;
  return true;
}

SimTime TokenBucketPacer::next_available(SimTime now, std::uint32_t bytes) const {
  const std::int64_t cost = std::min(capacity_, static_cast<std::int64_t>(bytes) * 8 * kTokenScale);
  const std::int64_t have = tokens_at(now);
  if (have >= cost) return now;
  const std::int64_t wait = (cost - have + rate_bps_ - 1) / rate_bps_;
  return std::max(now, last_) + Duration{wait};
}

Duration rto_for(const std::optional<RttEstimate>& rtt) {
  if (!rtt) return kInitialRto;
  return std::max(rtt->srtt + 4 * rtt->rttvar, kMinRto);
}

Sender::Sender(RecoveryConfig config, Trace& trace)
    : config_(config),
      trace_(trace),
      adapter_(config.tolerances, config.k_max, config.decision_interval_rtts, config.fixed_k),
      controller_(config.reinjection && config.opportunistic) {
  controller_.update(adapter_.k_theta(), std::nullopt);
}

void Sender::enqueue_frame(const Frame& frame, SimTime now) {
  for (const auto& du : frame.data_units) {
    if (du.seq != units_.size()) throw std::invalid_argument("data units must arrive in seq order");
    units_.push_back({du, AttemptId{}, SimTime{}});
    seq_of_.emplace(du.id, du.seq);
    send_queue_.push_back(du.seq);
  }
  note_mode(now);
}

Sender::UnitState& Sender::unit_of(DataId data) { return units_.at(seq_of_.at(data)); }

std::optional<AttemptId> Sender::monitored_attempt(DataId data) const {
  auto it = seq_of_.find(data);
  if (it == seq_of_.end()) return std::nullopt;
  const auto& u = units_[it->second];
  if (!u.sent || u.acked || !monitored_.contains(u.latest)) return std::nullopt;
  return u.latest;
}

TransmissionAttempt Sender::transmit(UnitState& u, AttemptKind kind, SimTime now) {
  const AttemptId id{attempts_.size()};
  const SimTime deadline = now + rto_for(rtt_);
  attempts_.push_back({u.unit.seq, kind, now, deadline});
  if (u.sent) unmonitor(u.latest);  // monitoring moves to the newest attempt
  if (!u.sent) u.first_sent = now;
  u.sent = true;
  u.latest = id;
  monitored_.emplace(id, u.unit.seq);
  rto_timers_.emplace(deadline, id);
  adapter_.on_packet_sent(kind);
  return {id, u.unit.id, u.unit.seq, kind, now, u.unit.payload_bytes};
}

void Sender::unmonitor(AttemptId id) {
  if (monitored_.erase(id) > 0) rto_timers_.erase({attempts_[id.value].rto_deadline, id});
}

PollResult Sender::poll_send(SimTime now, SendBudget& budget) {
  roll_intervals(now);
  if (config_.reinjection) controller_.poll_opportunistic(now);
  PollResult out;
  while (true) {
    while (!retransmit_queue_.empty() && !units_[retransmit_queue_.front().seq].awaiting_retransmission) {
      retransmit_queue_.pop_front();
    }
    enum class Pick { kNone, kRetransmit, kOpportunistic, kNew, kOffMode } pick = Pick::kNone;
    UnitState* u = nullptr;
    if (!retransmit_queue_.empty()) {
      pick = Pick::kRetransmit;
      u = &units_[retransmit_queue_.front().seq];
    } else if (auto d = config_.reinjection ? controller_.peek_opportunistic(now) : std::nullopt) {
      pick = Pick::kOpportunistic;
      u = &unit_of(*d);
    } else if (!send_queue_.empty()) {
      pick = Pick::kNew;
      u = &units_[send_queue_.front()];
    } else if (auto d2 = config_.reinjection ? controller_.peek_off_mode() : std::nullopt) {
      pick = Pick::kOffMode;
      u = &unit_of(*d2);
    }
    if (pick == Pick::kNone) break;
    if (!budget.try_consume(now, u->unit.payload_bytes)) {
      out.blocked_bytes = u->unit.payload_bytes;
      break;
    }
    switch (pick) {
      case Pick::kRetransmit: {
        const AttemptId lost = retransmit_queue_.front().lost;
        retransmit_queue_.pop_front();
        u->awaiting_retransmission = false;
        auto a = transmit(*u, AttemptKind::kRetransmission, now);
        std::optional<Duration> t_unit;
        if (!u->retransmitted) {
          u->retransmitted = true;
          t_unit = now - u->first_sent;
          adapter_.on_loss_detection_time(*t_unit);
        }
        if (config_.reinjection) controller_.on_retransmitted(u->unit.id, now);
        trace_.add(now, rec::Retransmit{a.id, a.data, a.bytes, lost, t_unit});
        out.sent.push_back({a});
        break;
      }
      case Pick::kOpportunistic:
      case Pick::kOffMode: {
        const bool opp = pick == Pick::kOpportunistic;
        const bool ok = opp ? controller_.take_opportunistic(u->unit.id, now)
                            : controller_.take_off_mode(now).has_value();
        if (!ok) throw std::logic_error("reinjection candidate vanished");
        auto a = transmit(*u, AttemptKind::kReinjection, now);
        trace_.add(now, rec::Reinject{a.id, a.data, a.bytes,
                                      opp ? ReinjectTrigger::kOpportunistic : ReinjectTrigger::kOffMode,
                                      controller_.reinjections_of(a.data)});
        out.sent.push_back({a});
        break;
      }
      case Pick::kNew: {
        send_queue_.pop_front();
        auto a = transmit(*u, AttemptKind::kInitial, now);
        trace_.add(now, rec::Send{a.id, a.data, a.bytes});
        out.sent.push_back({a});
        break;
      }
      case Pick::kNone:
        break;
    }
  }
  note_mode(now);
  return out;
}

void Sender::on_ack(const AckRecord& ack, SimTime now) {
  roll_intervals(now);
  if (ack.attempt.value >= attempts_.size()) throw std::invalid_argument("ack for unsent attempt");
  const auto& info = attempts_[ack.attempt.value];
  UnitState& u = units_[info.seq];

  // Keep the kFackThreshold largest acked ids (stored + 1 so 0 means none).
  std::uint64_t v = ack.attempt.value + 1;
  for (auto& slot : top_acked_) {
    if (v == slot) break;
    if (v > slot) std::swap(v, slot);
  }

  std::optional<Duration> sample;
  if (!u.acked) {
    u.acked = true;
    ++acked_units_;
    if (u.latest == ack.attempt) {
      sample = now - info.sent_at;
      rtt_ = update_srtt(rtt_, *sample);
    }
    unmonitor(u.latest);
    u.awaiting_retransmission = false;
    if (config_.reinjection) controller_.on_acked(u.unit.id);
  }
  trace_.add(now, rec::Ack{ack.attempt, u.unit.id, sample});

  if (rtt_ && !adapter_.interval_started()) adapter_.begin_interval(now, rtt_->srtt);

  if (const std::uint64_t third = top_acked_[kFackThreshold - 1]; third > 0) {
    while (!monitored_.empty() && monitored_.begin()->first.value + 1 < third) {
      judge_lost(monitored_.begin()->first, rec::LossCause::kFack, now);
    }
  }
}

void Sender::judge_lost(AttemptId id, rec::LossCause cause, SimTime now) {
  const auto& info = attempts_[id.value];
  UnitState& u = units_[info.seq];
  unmonitor(id);
  trace_.add(now, rec::LossDetect{id, u.unit.id, cause});
  adapter_.on_loss_detected(info.kind);
  u.awaiting_retransmission = true;
  retransmit_queue_.push_back({info.seq, id});
}

void Sender::on_timer(SimTime now) {
  roll_intervals(now);
  while (!rto_timers_.empty() && rto_timers_.begin()->first <= now) {
    judge_lost(rto_timers_.begin()->second, rec::LossCause::kRto, now);
  }
}

std::optional<SimTime> Sender::next_timer() const {
  std::optional<SimTime> t;
  auto consider = [&t](std::optional<SimTime> c) {
    if (c && (!t || *c < *t)) t = c;
  };
  if (!rto_timers_.empty()) consider(rto_timers_.begin()->first);
  consider(adapter_.interval_end());
  if (config_.reinjection) consider(controller_.next_opportunistic_deadline());
  return t;
}

void Sender::roll_intervals(SimTime now) {
  while (adapter_.interval_started() && *adapter_.interval_end() <= now) {
    const SimTime end = *adapter_.interval_end();
    const IntervalStats stats = adapter_.close_interval();
    const auto& d = adapter_.decision();
    trace_.add(now, rec::Interval{stats.interval_index, stats.packets_sent, stats.losses_detected,
                                  adapter_.t_unit(), d.k_alpha, d.k_beta, d.k_gamma, d.k_theta});
    controller_.update(adapter_.k_theta(), adapter_.t_unit());
    adapter_.begin_interval(end, rtt_->srtt);
  }
}

void Sender::note_mode(SimTime now) {
  const SenderMode m = classify_mode(send_queue_.size());
  if (m == mode_) return;
  mode_ = m;
  trace_.add(now, rec::Mode{m});
}

}  // namespace autorec
