#include "autorec/trace.h"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace autorec {
namespace {

using namespace rec;

class LineWriter {
 public:
  LineWriter(SimTime at, std::string_view kind) { os_ << to_us(at) << ' ' << kind; }

  LineWriter& u(std::string_view key, std::uint64_t v) {
    os_ << ' ' << key << '=' << v;
    return *this;
  }
  LineWriter& i(std::string_view key, std::int64_t v) {
    os_ << ' ' << key << '=' << v;
    return *this;
  }
  LineWriter& s(std::string_view key, std::string_view v) {
    os_ << ' ' << key << '=' << v;
    return *this;
  }
  LineWriter& opt_us(std::string_view key, const std::optional<Duration>& d) {
    os_ << ' ' << key << '=';
    if (d) os_ << d->count(); else os_ << '-';
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

std::string_view cause_name(LossCause c) { return c == LossCause::kFack ? "fack" : "rto"; }

struct Fields {
  std::map<std::string, std::string, std::less<>> kv;

  const std::string& raw(std::string_view key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing field '" + std::string(key) + "'");
    return it->second;
  }
  std::int64_t i(std::string_view key) const {
    const auto& v = raw(key);
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
      throw std::runtime_error("bad integer for '" + std::string(key) + "': " + v);
    }
    return out;
  }
  std::uint64_t u(std::string_view key) const { return static_cast<std::uint64_t>(i(key)); }
  std::optional<Duration> opt_us(std::string_view key) const {
    if (raw(key) == "-") return std::nullopt;
    return Duration{i(key)};
  }
};

std::string format_body(SimTime at, const TraceBody& body) {
  return std::visit(
      [at](const auto& b) -> std::string {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Open>) {
          return LineWriter(at, "open").str();
        } else if constexpr (std::is_same_v<T, Close>) {
          return LineWriter(at, "close").str();
        } else if constexpr (std::is_same_v<T, FrameGen>) {
          LineWriter w(at, "frame");
          w.u("frame", b.frame.value).u("bytes", b.bytes).u("units", b.units).u("data", b.first_data.value);
          w.s("deadline", b.deadline ? std::to_string(to_us(*b.deadline)) : "-");
          return w.str();
        } else if constexpr (std::is_same_v<T, Send>) {
          return LineWriter(at, "send").u("attempt", b.attempt.value).u("data", b.data.value).u("bytes", b.bytes).str();
        } else if constexpr (std::is_same_v<T, Retransmit>) {
          return LineWriter(at, "retransmit")
              .u("attempt", b.attempt.value).u("data", b.data.value).u("bytes", b.bytes)
              .u("lost", b.lost_attempt.value).opt_us("t_unit", b.t_unit).str();
        } else if constexpr (std::is_same_v<T, Reinject>) {
          return LineWriter(at, "reinject")
              .u("attempt", b.attempt.value).u("data", b.data.value).u("bytes", b.bytes)
              .s("trigger", to_string(b.trigger)).u("count", b.count).str();
        } else if constexpr (std::is_same_v<T, Drop>) {
          return LineWriter(at, "drop").u("attempt", b.attempt.value).str();
        } else if constexpr (std::is_same_v<T, Deliver>) {
          return LineWriter(at, "deliver").u("attempt", b.attempt.value).str();
        } else if constexpr (std::is_same_v<T, Ack>) {
          return LineWriter(at, "ack").u("attempt", b.attempt.value).u("data", b.data.value).opt_us("rtt", b.rtt).str();
        } else if constexpr (std::is_same_v<T, LossDetect>) {
          return LineWriter(at, "loss_detect").u("attempt", b.attempt.value).u("data", b.data.value)
              .s("cause", cause_name(b.cause)).str();
        } else if constexpr (std::is_same_v<T, Mode>) {
          return LineWriter(at, "mode").s("mode", to_string(b.mode)).str();
        } else {
          static_assert(std::is_same_v<T, Interval>);
          return LineWriter(at, "interval")
              .u("index", b.index).u("sent", b.sent).u("losses", b.losses).opt_us("t_unit", b.t_unit)
              .i("k_alpha", b.k_alpha).i("k_beta", b.k_beta).i("k_gamma", b.k_gamma).i("k_theta", b.k_theta)
              .str();
        }
      },
      body);
}

TraceBody parse_body(const std::string& kind, const Fields& f) {
  if (kind == "open") return Open{};
  if (kind == "close") return Close{};
  if (kind == "frame") {
    FrameGen b{FrameId{f.u("frame")}, f.u("bytes"), static_cast<std::uint32_t>(f.u("units")),
               DataId{f.u("data")}, std::nullopt};
    if (f.raw("deadline") != "-") b.deadline = at_us(f.i("deadline"));
    return b;
  }
  if (kind == "send") {
    return Send{AttemptId{f.u("attempt")}, DataId{f.u("data")}, static_cast<std::uint32_t>(f.u("bytes"))};
  }
  if (kind == "retransmit") {
    return Retransmit{AttemptId{f.u("attempt")}, DataId{f.u("data")},
                      static_cast<std::uint32_t>(f.u("bytes")), AttemptId{f.u("lost")},
                      f.opt_us("t_unit")};
  }
  if (kind == "reinject") {
    const auto& t = f.raw("trigger");
    if (t != "off_mode" && t != "opportunistic") throw std::runtime_error("bad trigger: " + t);
    return Reinject{AttemptId{f.u("attempt")}, DataId{f.u("data")},
                    static_cast<std::uint32_t>(f.u("bytes")),
                    t == "off_mode" ? ReinjectTrigger::kOffMode : ReinjectTrigger::kOpportunistic,
                    static_cast<std::uint32_t>(f.u("count"))};
  }
  if (kind == "drop") return Drop{AttemptId{f.u("attempt")}};
  if (kind == "deliver") return Deliver{AttemptId{f.u("attempt")}};
  if (kind == "ack") return Ack{AttemptId{f.u("attempt")}, DataId{f.u("data")}, f.opt_us("rtt")};
  if (kind == "loss_detect") {
    const auto& c = f.raw("cause");
    if (c != "fack" && c != "rto") throw std::runtime_error("bad cause: " + c);
    return LossDetect{AttemptId{f.u("attempt")}, DataId{f.u("data")},
                      c == "fack" ? LossCause::kFack : LossCause::kRto};
  }
  if (kind == "mode") {
    const auto& m = f.raw("mode");
    if (m != "on" && m != "off") throw std::runtime_error("bad mode: " + m);
    return Mode{m == "on" ? SenderMode::kOn : SenderMode::kOff};
  }
  if (kind == "interval") {
    return Interval{f.u("index"), f.u("sent"), f.u("losses"), f.opt_us("t_unit"),
                    static_cast<int>(f.i("k_alpha")), static_cast<int>(f.i("k_beta")),
                    static_cast<int>(f.i("k_gamma")), static_cast<int>(f.i("k_theta"))};
  }
  throw std::runtime_error("unknown record kind '" + kind + "'");
}

}  // namespace

std::string format_record(const TraceRecord& r) { return format_body(r.at, r.body); }

TraceRecord parse_record(const std::string& line) {
  std::istringstream is(line);
  std::int64_t t = 0;
  std::string kind;
  if (!(is >> t >> kind)) throw std::runtime_error("expected 'time_us kind'");
  Fields f;
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw std::runtime_error("bad field '" + tok + "'");
    f.kv.emplace(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return {at_us(t), parse_body(kind, f)};
}

void Trace::write(std::ostream& os) const {
  for (const auto& r : records_) os << format_record(r) << '\n';
}

std::string Trace::to_text() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

Trace Trace::parse(std::istream& is) {
  Trace t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      t.records_.push_back(parse_record(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return t;
}

Trace Trace::from_text(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

}  // namespace autorec
