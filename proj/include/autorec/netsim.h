#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <variant>
#include <vector>

#include "autorec/arq.h"
#include "autorec/config.h"
#include "autorec/core.h"
#include "autorec/trace.h"

namespace autorec {

// Seeded 64-bit Mersenne Twister with a portable [0, 1) mapping (53 bits),
// so draws agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

// Independent stream seed derived from a run seed (splitmix64 finalizer).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

enum class RngStream : std::uint64_t { kLossDraw = 1, kLossState = 2 };

// Stateful realization of a LossModel.
class LossProcess {
 public:
  LossProcess(const LossModel& model, std::uint64_t seed);
  // Decides the fate of a packet entering the link at `now`. Calls must come
  // in non-decreasing time order.
  bool drop(SimTime now);
  bool in_bad_state() const { return bad_; }

 private:
  LossModel model_;
  Rng draw_;
  Rng state_;
  bool bad_ = false;
  std::int64_t step_ = 0;  // lattice index of the current GE state
};

struct LinkFate {
  bool delivered = false;
  SimTime arrival;  // meaningful when delivered
};

// FIFO serializing link. Busy time is kept in microseconds * bandwidth so
// back-to-back packets accumulate no rounding error.
class Link {
 public:
  Link(const LinkConfig& config, std::uint64_t seed);
  LinkFate transmit(std::uint32_t bytes, SimTime now);

 private:
  std::int64_t bandwidth_bps_;
  Duration one_way_;
  LossProcess loss_;
  __int128 busy_until_scaled_ = 0;
};

// Bytes per frame: floor(bitrate / frame_rate / 8).
std::uint64_t frame_bytes(const TrafficConfig& t);
// Generation instant of frame k: k / frame_rate seconds, rounded half-up to us.
SimTime frame_time(std::uint64_t k, std::uint32_t frame_rate);
// Number of frames generated strictly before the end of the traffic.
std::uint64_t frame_count(const TrafficConfig& t);

// Produces consecutive frames, continuing the connection's byte and unit numbering.
class TrafficSource {
 public:
  TrafficSource(TrafficConfig traffic, std::optional<Duration> playback_deadline);
  Frame generate_frame(std::uint64_t k);
  bool done(std::uint64_t next_k) const { return next_k >= count_; }
  std::uint64_t count() const { return count_; }

 private:
  TrafficConfig traffic_;
  std::optional<Duration> deadline_;
  std::uint64_t bytes_per_frame_;
  std::uint64_t count_;
  std::uint64_t next_offset_ = 0;
  std::uint32_t next_seq_ = 0;
};

namespace ev {
struct FrameTick {
  std::uint64_t k = 0;
};
struct Deliver {
  TransmissionAttempt attempt;
};
struct AckArrive {
  AckRecord ack;
};
struct Wake {};
}  // namespace ev

using Event = std::variant<ev::FrameTick, ev::Deliver, ev::AckArrive, ev::Wake>;

// Min-heap on (time, insertion sequence).
class EventQueue {
 public:
  void push(SimTime at, Event e);
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime top_time() const { return heap_.top().at; }
  std::pair<SimTime, Event> pop();

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    Event event;
    bool operator>(const Entry& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
  std::uint64_t next_seq_ = 0;
};

// Receiver: acknowledges every delivered attempt immediately and tracks the
// contiguous prefix of the byte stream.
class Receiver {
 public:
  AckRecord on_deliver(const TransmissionAttempt& a, SimTime now);

 private:
  std::uint64_t contiguous_ = 0;
  std::map<std::uint64_t, std::uint64_t> pending_;  // out-of-order start -> end
};

// Runs one simulation with `config.seed` and returns the full trace. The same
// config always yields the same trace.
Trace run(const ExperimentConfig& config);

}  // namespace autorec
