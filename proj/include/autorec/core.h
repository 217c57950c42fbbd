#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace autorec {

// Simulated clock. Ticks are integer microseconds since simulation start.
struct SimClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using SimTime = SimClock::time_point;
// Fractional milliseconds, used where formulas produce non-integer durations.
using Millis = std::chrono::duration<double, std::milli>;

inline constexpr SimTime kSimStart{};

constexpr std::int64_t to_us(SimTime t) { return t.time_since_epoch().count(); }
constexpr std::int64_t to_us(Duration d) { return d.count(); }
constexpr SimTime at_us(std::int64_t us) { return SimTime{Duration{us}}; }

// Rounds half-up to whole microseconds. Used at the final conversion of any
// fractional quantity back onto the clock.
Duration round_to_us(Millis m);

template <typename Tag>
struct StrongId {
  std::uint64_t value = 0;
  friend constexpr auto operator<=>(StrongId, StrongId) = default;
};

struct DataIdTag {};
struct AttemptIdTag {};
struct FrameIdTag {};

// Application data identity: the stream offset of its first byte.
using DataId = StrongId<DataIdTag>;
// Wire packet number. Every transmission gets a fresh one.
using AttemptId = StrongId<AttemptIdTag>;
using FrameId = StrongId<FrameIdTag>;

inline constexpr std::uint32_t kMtuPayloadBytes = 1300;

struct DataUnit {
  DataId id;
  // Connection-wide ordinal (0, 1, 2, ...) of this unit, dense.
  std::uint32_t seq = 0;
  FrameId frame;
  std::uint32_t payload_bytes = 0;
};

enum class AttemptKind : std::uint8_t { kInitial, kRetransmission, kReinjection };

enum class ReinjectTrigger : std::uint8_t { kOffMode, kOpportunistic };

struct TransmissionAttempt {
  AttemptId id;
  DataId data;
  std::uint32_t seq = 0;
  AttemptKind kind = AttemptKind::kInitial;
  SimTime sent_at;
  std::uint32_t bytes = 0;
};

struct Frame {
  FrameId id;
  SimTime generated_at;
  std::optional<SimTime> deadline_at;
  std::vector<DataUnit> data_units;
};

enum class SenderMode : std::uint8_t { kOn, kOff };

// Off exactly when no unsent application data is queued.
constexpr SenderMode classify_mode(std::size_t send_queue_len) {
  return send_queue_len == 0 ? SenderMode::kOff : SenderMode::kOn;
}

struct RttEstimate {
  Duration srtt{};
  Duration rttvar{};
  friend bool operator==(const RttEstimate&, const RttEstimate&) = default;
};

// Exponentially weighted RTT smoothing (gains 1/8 and 1/4). The first sample
// initializes srtt = sample, rttvar = sample / 2. Throws std::invalid_argument
// for a non-positive sample.
RttEstimate update_srtt(const std::optional<RttEstimate>& prev, Duration sample);

// Splits `frame_bytes` into full-MTU units plus one remainder unit.
// `first_offset` and `first_seq` continue the connection's numbering.
std::vector<DataUnit> segment_frame(FrameId frame, std::uint64_t first_offset,
                                    std::uint32_t first_seq,
                                    std::uint64_t frame_bytes,
                                    std::uint32_t mtu_payload = kMtuPayloadBytes);

std::string_view to_string(AttemptKind kind);
std::string_view to_string(ReinjectTrigger trigger);
std::string_view to_string(SenderMode mode);

}  // namespace autorec

template <typename Tag>
struct std::hash<autorec::StrongId<Tag>> {
  std::size_t operator()(autorec::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
