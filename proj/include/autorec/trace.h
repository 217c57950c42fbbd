#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autorec/core.h"

namespace autorec {

// Trace records. Each serializes to one line `time_us kind key=value ...`
// with a fixed field order; see docs/trace-format.md.
namespace rec {

struct Open {};
struct Close {};
struct FrameGen {
  FrameId frame;
  std::uint64_t bytes = 0;
  std::uint32_t units = 0;
  DataId first_data;
  std::optional<SimTime> deadline;
};
struct Send {
  AttemptId attempt;
  DataId data;
  std::uint32_t bytes = 0;
};
struct Retransmit {
  AttemptId attempt;
  DataId data;
  std::uint32_t bytes = 0;
  AttemptId lost_attempt;          // the attempt whose loss triggered this one
  std::optional<Duration> t_unit;  // set on the data unit's first retransmission
};
struct Reinject {
  AttemptId attempt;
  DataId data;
  std::uint32_t bytes = 0;
  ReinjectTrigger trigger = ReinjectTrigger::kOffMode;
  std::uint32_t count = 0;  // A_i after this replica
};
struct Drop {
  AttemptId attempt;
};
struct Deliver {
  AttemptId attempt;
};
struct Ack {
  AttemptId attempt;
  DataId data;
  std::optional<Duration> rtt;  // absent for duplicates and superseded attempts
};
enum class LossCause : std::uint8_t { kFack, kRto };
struct LossDetect {
  AttemptId attempt;
  DataId data;
  LossCause cause = LossCause::kFack;
};
struct Mode {
  SenderMode mode = SenderMode::kOn;
};
struct Interval {
  std::uint64_t index = 0;
  std::uint64_t sent = 0;
  std::uint64_t losses = 0;
  std::optional<Duration> t_unit;
  int k_alpha = 0;
  int k_beta = 0;
  int k_gamma = 0;
  int k_theta = 0;
};

}  // namespace rec

using TraceBody = std::variant<rec::Open, rec::Close, rec::FrameGen, rec::Send, rec::Retransmit,
                               rec::Reinject, rec::Drop, rec::Deliver, rec::Ack, rec::LossDetect,
                               rec::Mode, rec::Interval>;

struct TraceRecord {
  SimTime at;
  TraceBody body;
};

class Trace {
 public:
  template <typename T>
  void add(SimTime at, T body) {
    records_.push_back({at, TraceBody{std::move(body)}});
  }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::vector<TraceRecord>& records() { return records_; }
  std::size_t size() const { return records_.size(); }

  void write(std::ostream& os) const;
  std::string to_text() const;
  // Throws std::runtime_error with the offending line number on malformed input.
  static Trace parse(std::istream& is);
  static Trace from_text(const std::string& text);

 private:
  std::vector<TraceRecord> records_;
};

std::string format_record(const TraceRecord& r);
TraceRecord parse_record(const std::string& line);

}  // namespace autorec
