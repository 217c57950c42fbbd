#include "autorec/netsim.h"

#include <stdexcept>

namespace autorec {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

LossProcess::LossProcess(const LossModel& model, std::uint64_t seed)
    : model_(model),
      draw_(stream_seed(seed, static_cast<std::uint64_t>(RngStream::kLossDraw))),
      state_(stream_seed(seed, static_cast<std::uint64_t>(RngStream::kLossState))) {
  if (const auto* g = std::get_if<GilbertElliottLoss>(&model_)) {
    const double total = g->p_good_to_bad + g->p_bad_to_good;
    const double pi_bad = total > 0.0 ? g->p_good_to_bad / total : 0.0;
    bad_ = state_.bernoulli(pi_bad);
  }
}

bool LossProcess::drop(SimTime now) {
  if (const auto* b = std::get_if<BernoulliLoss>(&model_)) return draw_.bernoulli(b->p);
  const auto& g = std::get<GilbertElliottLoss>(model_);
  const std::int64_t target = to_us(now) / g.state_step.count();
  for (; step_ < target; ++step_) {
    bad_ = bad_ ? !state_.bernoulli(g.p_bad_to_good) : state_.bernoulli(g.p_good_to_bad);
  }
  return draw_.bernoulli(bad_ ? g.bad_loss : g.good_loss);
}

Link::Link(const LinkConfig& config, std::uint64_t seed)
    : bandwidth_bps_(static_cast<std::int64_t>(config.bandwidth_bps)),
      one_way_(config.one_way_delay()),
      loss_(config.loss, seed) {
  if (bandwidth_bps_ <= 0) throw std::invalid_argument("bandwidth must be positive");
}

LinkFate Link::transmit(std::uint32_t bytes, SimTime now) {
  const __int128 bw = bandwidth_bps_;
  const __int128 start = std::max<__int128>(static_cast<__int128>(to_us(now)) * bw, busy_until_scaled_);
  busy_until_scaled_ = start + static_cast<__int128>(bytes) * 8 * 1'000'000;
  const auto finish_us = static_cast<std::int64_t>((busy_until_scaled_ + bw - 1) / bw);
  LinkFate fate;
  fate.delivered = !loss_.drop(now);
  fate.arrival = at_us(finish_us) + one_way_;
  return fate;
}

std::uint64_t frame_bytes(const TrafficConfig& t) {
  if (t.frame_rate == 0) throw std::invalid_argument("frame_rate must be positive");
  return t.bitrate_bps / t.frame_rate / 8;
}

SimTime frame_time(std::uint64_t k, std::uint32_t frame_rate) {
  // round(k * 1e6 / fps) with ties up, in integers.
  const std::uint64_t num = k * 1'000'000ULL * 2 + frame_rate;
  return at_us(static_cast<std::int64_t>(num / (2ULL * frame_rate)));
}

std::uint64_t frame_count(const TrafficConfig& t) {
  if (t.duration <= Duration::zero()) return 0;
  const auto us = static_cast<std::uint64_t>(t.duration.count());
  std::uint64_t k = us * t.frame_rate / 1'000'000ULL;
  while (k > 0 && frame_time(k - 1, t.frame_rate) >= at_us(static_cast<std::int64_t>(us))) --k;
  while (frame_time(k, t.frame_rate) < at_us(static_cast<std::int64_t>(us))) ++k;
  return k;
}

TrafficSource::TrafficSource(TrafficConfig traffic, std::optional<Duration> playback_deadline)
    : traffic_(traffic),
      deadline_(playback_deadline),
      bytes_per_frame_(frame_bytes(traffic)),
      count_(frame_count(traffic)) {}

Frame TrafficSource::generate_frame(std::uint64_t k) {
  Frame f;
  f.id = FrameId{k};
  f.generated_at = frame_time(k, traffic_.frame_rate);
  if (deadline_) f.deadline_at = f.generated_at + *deadline_;
  f.data_units = segment_frame(f.id, next_offset_, next_seq_, bytes_per_frame_);
  next_offset_ += bytes_per_frame_;
  next_seq_ += static_cast<std::uint32_t>(f.data_units.size());
  return f;
}

void EventQueue::push(SimTime at, Event e) { heap_.push({at, next_seq_++, std::move(e)}); }

std::pair<SimTime, Event> EventQueue::pop() {
  Entry top = heap_.top();
  heap_.pop();
  return {top.at, std::move(top.event)};
}

AckRecord Receiver::on_deliver(const TransmissionAttempt& a, SimTime now) {
  const std::uint64_t start = a.data.value;
  const std::uint64_t end = start + a.bytes;
  if (end > contiguous_) {
    if (start <= contiguous_) {
      contiguous_ = end;
    } else {
      pending_.emplace(start, end);
    }
    for (auto it = pending_.begin(); it != pending_.end() && it->first <= contiguous_;) {
      contiguous_ = std::max(contiguous_, it->second);
      it = pending_.erase(it);
    }
  }
  return {a.id, contiguous_, now};
}

Trace run(const ExperimentConfig& config) {
  config.validate();
  Trace trace;
  trace.add(kSimStart, rec::Open{});

  Sender sender(config.recovery(), trace);
  TokenBucketPacer pacer(config.link.bandwidth_bps);
  Link link(config.link, config.seed);
  Receiver receiver;
  TrafficSource source(config.traffic, config.playback_deadline);
  EventQueue events;

  const SimTime stop_at = at_us(0) + config.traffic.duration + config.drain;
  const Duration ack_delay = config.link.one_way_delay();
  std::uint64_t next_frame = 0;
  std::optional<SimTime> wake_at;
  SimTime now = kSimStart;

  if (!source.done(0)) events.push(frame_time(0, config.traffic.frame_rate), ev::FrameTick{0});

  auto pump = [&](SimTime t) {
    PollResult res = sender.poll_send(t, pacer);
    for (const auto& out : res.sent) {
      const LinkFate fate = link.transmit(out.attempt.bytes, t);
      if (fate.delivered) {
        events.push(fate.arrival, ev::Deliver{out.attempt});
      } else {
        trace.add(t, rec::Drop{out.attempt.id});
      }
    }
    std::optional<SimTime> want = sender.next_timer();
    if (res.blocked_bytes) {
      const SimTime ready = pacer.next_available(t, *res.blocked_bytes);
      if (!want || ready < *want) want = ready;
    }
    if (!want) return;
    if (*want < t) want = t;
    if (!wake_at || *wake_at < t || *want < *wake_at) {
      wake_at = want;
      events.push(*want, ev::Wake{});
    }
  };

  std::uint64_t same_time_wakes = 0;
  while (!events.empty()) {
    if (events.top_time() > stop_at) break;
    auto [t, e] = events.pop();
    if (t == now && std::holds_alternative<ev::Wake>(e)) {
      if (++same_time_wakes > 100'000) throw std::logic_error("simulation stalled: wake loop");
    } else {
      same_time_wakes = 0;
    }
    now = t;
    std::visit(
        [&](auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ev::FrameTick>) {
            Frame f = source.generate_frame(x.k);
            trace.add(t, rec::FrameGen{f.id, frame_bytes(config.traffic),
                                       static_cast<std::uint32_t>(f.data_units.size()),
                                       f.data_units.front().id, f.deadline_at});
            sender.enqueue_frame(f, t);
            next_frame = x.k + 1;
            if (!source.done(next_frame)) {
              events.push(frame_time(next_frame, config.traffic.frame_rate), ev::FrameTick{next_frame});
            }
          } else if constexpr (std::is_same_v<T, ev::Deliver>) {
            trace.add(t, rec::Deliver{x.attempt.id});
            events.push(t + ack_delay, ev::AckArrive{receiver.on_deliver(x.attempt, t)});
          } else if constexpr (std::is_same_v<T, ev::AckArrive>) {
            sender.on_ack(x.ack, t);
          } else {
            if (wake_at && *wake_at == t) wake_at.reset();
            sender.on_timer(t);
          }
        },
        e);
    pump(t);
    if (source.done(next_frame) && sender.all_acked()) break;
  }
  trace.add(std::min(now, stop_at), rec::Close{});
  return trace;
}

}  // namespace autorec
