#include "autorec/metrics.h"

#include <algorithm>
#include <stdexcept>

namespace autorec {
namespace {

double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

struct UnitHome {
  std::size_t frame = 0;
  std::uint32_t bytes = 0;
};

}  // namespace

TraceIndex::TraceIndex(const Trace& trace) {
  std::unordered_map<DataId, UnitHome> home;
  std::vector<std::uint32_t> frame_missing;

  auto add_attempt = [this](AttemptId id, DataId data, AttemptKind kind, SimTime at) {
    if (id.value != attempts_.size()) throw std::invalid_argument("trace attempt ids are not dense");
    attempts_.push_back({data, kind, at, std::nullopt, false});
    ++counts_[static_cast<int>(kind)];
  };
  auto attempt = [this](AttemptId id) -> AttemptRow& {
    if (id.value >= attempts_.size()) throw std::invalid_argument("trace references an unsent attempt");
    return attempts_[id.value];
  };

  for (const auto& r : trace.records()) {
    const SimTime t = r.at;
    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, rec::FrameGen>) {
            const std::size_t fi = frames_.size();
            frames_.push_back({b.frame, t, b.deadline, std::nullopt, b.bytes});
            const auto units = segment_frame(b.frame, b.first_data.value, 0, b.bytes);
            for (const auto& u : units) home.emplace(u.id, UnitHome{fi, u.payload_bytes});
            frame_missing.push_back(static_cast<std::uint32_t>(units.size()));
            units_generated_ += units.size();
            bytes_generated_ += b.bytes;
          } else if constexpr (std::is_same_v<T, rec::Send>) {
            add_attempt(b.attempt, b.data, AttemptKind::kInitial, t);
          } else if constexpr (std::is_same_v<T, rec::Retransmit>) {
            add_attempt(b.attempt, b.data, AttemptKind::kRetransmission, t);
            const Duration round = t - attempt(b.lost_attempt).sent_at;
            auto [it, fresh] = lost_index_.emplace(b.data, lost_.size());
            if (fresh) {
              LostUnit u;
              u.data = b.data;
              u.first_retransmit = t;
              u.first_retransmit_attempt = b.attempt;
              u.t_unit = b.t_unit.value_or(round);
              u.shortest_round = round;
              lost_.push_back(u);
              if (b.t_unit) {
                t_unit_sum_ += b.t_unit->count();
                ++t_unit_samples_;
              }
            }
            LostUnit& u = lost_[it->second];
            u.shortest_round = std::min(u.shortest_round, round);
            ++u.recovery_attempts;
          } else if constexpr (std::is_same_v<T, rec::Reinject>) {
            add_attempt(b.attempt, b.data, AttemptKind::kReinjection, t);
            if (auto it = lost_index_.find(b.data); it != lost_index_.end()) {
              ++lost_[it->second].recovery_attempts;
            }
            if (b.trigger == ReinjectTrigger::kOpportunistic) ++reinject_opp_;
          } else if constexpr (std::is_same_v<T, rec::Drop>) {
            attempt(b.attempt).dropped = true;
            ++drops_;
          } else if constexpr (std::is_same_v<T, rec::Deliver>) {
            AttemptRow& a = attempt(b.attempt);
            a.delivered_at = t;
            if (first_delivery_.contains(a.data)) return;
            auto h = home.find(a.data);
            first_delivery_.emplace(a.data, std::make_pair(t, h == home.end() ? 0U : h->second.bytes));
            if (h != home.end() && --frame_missing[h->second.frame] == 0) {
              frames_[h->second.frame].completed_at = t;
            }
          } else if constexpr (std::is_same_v<T, rec::Mode>) {
            mode_changes_.emplace_back(t, b.mode);
          } else if constexpr (std::is_same_v<T, rec::Close>) {
            end_ = t;
          }
        },
        r.body);
  }
  if (!trace.records().empty()) end_ = std::max(end_, trace.records().back().at);

  for (std::size_t i = 0; i < attempts_.size(); ++i) {
    const auto& a = attempts_[i];
    if (a.kind == AttemptKind::kInitial || !a.delivered_at) continue;
    auto it = lost_index_.find(a.data);
    if (it == lost_index_.end()) continue;
    LostUnit& u = lost_[it->second];
    if (u.first_retransmit_attempt.value == i) u.first_retransmit_delivered = true;
    if (!u.latency && a.sent_at >= u.first_retransmit) u.latency = a.sent_at - u.first_retransmit;
  }
}

const LostUnit* TraceIndex::lost_unit(DataId data) const {
  auto it = lost_index_.find(data);
  return it == lost_index_.end() ? nullptr : &lost_[it->second];
}

std::optional<SimTime> TraceIndex::first_delivery(DataId data) const {
  auto it = first_delivery_.find(data);
  if (it == first_delivery_.end()) return std::nullopt;
  return it->second.first;
}

Duration TraceIndex::off_mode_time(SimTime until) const {
  Duration off{};
  SenderMode mode = SenderMode::kOff;
  SimTime since = kSimStart;
  for (const auto& [t, m] : mode_changes_) {
    if (t > until) break;
    if (mode == SenderMode::kOff) off += t - since;
    mode = m;
    since = t;
  }
  if (mode == SenderMode::kOff && until > since) off += until - since;
  return off;
}

std::optional<Duration> TraceIndex::mean_t_unit() const {
  if (t_unit_samples_ == 0) return std::nullopt;
  const auto n = static_cast<std::int64_t>(t_unit_samples_);
  return Duration{(t_unit_sum_ + n / 2) / n};
}

std::uint64_t TraceIndex::distinct_bytes_delivered(SimTime until) const {
  std::uint64_t total = 0;
  for (const auto& [_, v] : first_delivery_) {
    if (v.first <= until) total += v.second;
  }
  return total;
}

std::optional<Duration> recovery_latency(const TraceIndex& idx, DataId data) {
  const LostUnit* u = idx.lost_unit(data);
  return u ? u->latency : std::nullopt;
}

LatencyStats latency_stats(const TraceIndex& idx) {
  LatencyStats s;
  for (const auto& u : idx.lost_units()) {
    ++s.lost_units;
    if (!u.latency) {
      // Never recovered within the trace: certainly slower than a round.
      ++s.deteriorated;
      ++s.deteriorated_first_t_unit;
      continue;
    }
    ++s.recovered_units;
    const double ms = to_ms(*u.latency);
    s.sum_all_ms += ms;
    if (*u.latency >= u.shortest_round) ++s.deteriorated;
    if (*u.latency >= u.t_unit) ++s.deteriorated_first_t_unit;
    if (!u.first_retransmit_delivered) {
      ++s.multi_attempt_units;
      s.sum_ms += ms;
      s.max_ms = std::max(s.max_ms.value_or(0.0), ms);
    }
  }
  if (s.multi_attempt_units > 0) s.mean_ms = s.sum_ms / static_cast<double>(s.multi_attempt_units);
  if (s.recovered_units > 0) s.mean_all_ms = s.sum_all_ms / static_cast<double>(s.recovered_units);
  return s;
}

double deterioration_rate(const TraceIndex& idx) {
  const auto s = latency_stats(idx);
  return s.lost_units == 0 ? 0.0 : static_cast<double>(s.deteriorated) / static_cast<double>(s.lost_units);
}

double deterioration_rate_first_t_unit(const TraceIndex& idx) {
  const auto s = latency_stats(idx);
  return s.lost_units == 0 ? 0.0
                           : static_cast<double>(s.deteriorated_first_t_unit) / static_cast<double>(s.lost_units);
}

double redundancy_cost(const TraceIndex& idx) {
  const auto initials = idx.count(AttemptKind::kInitial);
  if (initials == 0) return 0.0;
  return static_cast<double>(idx.count(AttemptKind::kReinjection)) / static_cast<double>(initials);
}

double goodput_bps(const TraceIndex& idx, Duration window) {
  if (window <= Duration::zero()) return 0.0;
  const double bits = 8.0 * static_cast<double>(idx.distinct_bytes_delivered(kSimStart + window));
  return bits / (static_cast<double>(window.count()) / 1e6);
}

GoodputReduction goodput_reduction(double autorec_bps, PairKey autorec_key, double baseline_bps,
                                   PairKey baseline_key) {
  if (!(autorec_key == baseline_key)) {
    throw std::invalid_argument("goodput reduction needs runs with the same config and seed");
  }
  if (!(baseline_bps > 0.0)) throw std::invalid_argument("baseline goodput must be positive");
  GoodputReduction g;
  g.raw = 1.0 - autorec_bps / baseline_bps;
  g.reported = std::max(0.0, g.raw);
  return g;
}

QoEStats freezing(const TraceIndex& idx, Duration startup_buffer, Duration span) {
  QoEStats q;
  const auto& frames = idx.frames();
  if (frames.empty()) return q;
  const SimTime origin = frames.front().generated_at;
  Duration stall{};
  std::uint64_t freezes = 0;
  Duration frozen{};
  for (const auto& f : frames) {
    const SimTime due = origin + startup_buffer + (f.generated_at - origin) + stall;
    if (f.completed_at && *f.completed_at <= due) continue;
    ++freezes;
    if (!f.completed_at) {
      if (idx.end() > due) frozen += idx.end() - due;
      break;  // playback never resumes
    }
    const Duration d = *f.completed_at - due;
    frozen += d;
    stall += d;
  }
  const double span_s = static_cast<double>(span.count()) / 1e6;
  if (span_s > 0) {
    q.freeze_count_per_100s = static_cast<double>(freezes) * 100.0 / span_s;
    q.freeze_ms_per_100s = to_ms(frozen) * 100.0 / span_s;
  }

  std::uint64_t with_deadline = 0;
  std::uint64_t missed = 0;
  for (const auto& f : frames) {
    if (!f.deadline) continue;
    ++with_deadline;
    if (!f.completed_at || *f.completed_at > *f.deadline) ++missed;
  }
  if (with_deadline > 0) q.deadline_miss_rate = static_cast<double>(missed) / static_cast<double>(with_deadline);
  return q;
}

RunMetrics compute_metrics(const Trace& trace, Duration traffic_duration, Duration startup_buffer) {
  const TraceIndex idx(trace);
  RunMetrics m;
  m.latency = latency_stats(idx);
  const auto lost = static_cast<double>(m.latency.lost_units);
  if (m.latency.lost_units > 0) {
    m.deterioration_rate = static_cast<double>(m.latency.deteriorated) / lost;
    m.deterioration_rate_first_t_unit = static_cast<double>(m.latency.deteriorated_first_t_unit) / lost;
  }
  m.redundancy_cost = redundancy_cost(idx);
  m.goodput_bps = goodput_bps(idx, traffic_duration);
  if (!idx.attempts().empty()) {
    m.loss_rate = static_cast<double>(idx.drops()) / static_cast<double>(idx.attempts().size());
  }
  if (auto t = idx.mean_t_unit()) m.mean_t_unit_ms = to_ms(*t);
  if (traffic_duration > Duration::zero()) {
    m.off_mode_fraction = static_cast<double>(idx.off_mode_time(kSimStart + traffic_duration).count()) /
                          static_cast<double>(traffic_duration.count());
  }
  if (idx.units_generated() > 0) {
    m.delivered_fraction = static_cast<double>(idx.units_delivered()) / static_cast<double>(idx.units_generated());
  }
  m.initials = idx.count(AttemptKind::kInitial);
  m.retransmissions = idx.count(AttemptKind::kRetransmission);
  m.reinjections = idx.count(AttemptKind::kReinjection);
  m.reinjections_opportunistic = idx.reinjections_opportunistic();
  m.qoe = freezing(idx, startup_buffer, traffic_duration);
  return m;
}

}  // namespace autorec
