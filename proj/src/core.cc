#include "autorec/core.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace autorec {

Duration round_to_us(Millis m) {
  return Duration{static_cast<std::int64_t>(std::floor(m.count() * 1000.0 + 0.5))};
}

RttEstimate update_srtt(const std::optional<RttEstimate>& prev, Duration sample) {
  if (sample <= Duration::zero()) {
    throw std::invalid_argument("rtt sample must be positive");
  }
  const std::int64_t x = sample.count();
  if (!prev) {
    return {sample, Duration{(x + 1) / 2}};
  }
  const std::int64_t s = prev->srtt.count();
  const std::int64_t v = prev->rttvar.count();
  const std::int64_t err = s > x ? s - x : x - s;
  // Half-up rounding of 7/8 s + 1/8 x and 3/4 v + 1/4 |s - x|.
  return {Duration{(7 * s + x + 4) / 8}, Duration{(3 * v + err + 2) / 4}};
}

std::vector<DataUnit> segment_frame(FrameId frame, std::uint64_t first_offset,
                                    std::uint32_t first_seq,
                                    std::uint64_t frame_bytes,
                                    std::uint32_t mtu_payload) {
  if (mtu_payload == 0) throw std::invalid_argument("mtu_payload must be positive");
  std::vector<DataUnit> units;
  units.reserve(frame_bytes / mtu_payload + 1);
  std::uint64_t offset = first_offset;
  std::uint64_t remaining = frame_bytes;
  std::uint32_t seq = first_seq;
  while (remaining > 0) {
    const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(remaining, mtu_payload));
    units.push_back({DataId{offset}, seq++, frame, len});
    offset += len;
    remaining -= len;
  }
  return units;
}

std::string_view to_string(AttemptKind kind) {
  switch (kind) {
    case AttemptKind::kInitial: return "initial";
    case AttemptKind::kRetransmission: return "retransmission";
    case AttemptKind::kReinjection: return "reinjection";
  }
  return "?";
}

std::string_view to_string(ReinjectTrigger trigger) {
  return trigger == ReinjectTrigger::kOffMode ? "off_mode" : "opportunistic";
}

std::string_view to_string(SenderMode mode) { return mode == SenderMode::kOn ? "on" : "off"; }

}  // namespace autorec
