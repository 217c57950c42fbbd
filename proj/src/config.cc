#include "autorec/config.h"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace autorec {
namespace {

using nlohmann::json;

}  // namespace

void to_json(json& j, const ExperimentConfig& c);
void from_json(const json& j, ExperimentConfig& c);

namespace {

void fail(const std::string& field, const std::string& what) {
  throw std::invalid_argument(field + ": " + what);
}

void check_fraction(const std::string& field, double v) {
  if (!(v >= 0.0 && v <= 1.0)) fail(field, "must lie in [0, 1]");
}

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> known) {
  if (!j.is_object()) fail(where.empty() ? "config" : where, "expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

double ms_of(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
Duration from_ms(double ms) { return round_to_us(Millis{ms}); }

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(where + key, e.what());
  }
}

void read_ms(const json& j, const char* key, const std::string& where, Duration& out) {
  if (!j.contains(key)) return;
  double ms = 0;
  read(j, key, where, ms);
  if (!std::isfinite(ms)) fail(where + key, "must be finite");
  out = from_ms(ms);
}

json loss_to_json(const LossModel& m) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BernoulliLoss>) {
          return {{"model", "bernoulli"}, {"p", l.p}};
        } else {
          return {{"model", "gilbert_elliott"},
                  {"good_loss", l.good_loss},
                  {"bad_loss", l.bad_loss},
                  {"p_good_to_bad", l.p_good_to_bad},
                  {"p_bad_to_good", l.p_bad_to_good},
                  {"state_step_ms", ms_of(l.state_step)}};
        }
      },
      m);
}

LossModel loss_from_json(const json& j) {
  const std::string where = "link.loss.";
  std::string model = "bernoulli";
  read(j, "model", where, model);
  if (model == "bernoulli") {
    reject_unknown(j, "link.loss", {"model", "p"});
    BernoulliLoss b;
    read(j, "p", where, b.p);
    return b;
  }
  if (model == "gilbert_elliott") {
    reject_unknown(j, "link.loss",
                   {"model", "good_loss", "bad_loss", "p_good_to_bad", "p_bad_to_good", "state_step_ms"});
    GilbertElliottLoss g;
    read(j, "good_loss", where, g.good_loss);
    read(j, "bad_loss", where, g.bad_loss);
    read(j, "p_good_to_bad", where, g.p_good_to_bad);
    read(j, "p_bad_to_good", where, g.p_bad_to_good);
    read_ms(j, "state_step_ms", where, g.state_step);
    return g;
  }
  fail("link.loss.model", "expected 'bernoulli' or 'gilbert_elliott', got '" + model + "'");
  return {};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double stationary_loss_rate(const LossModel& m) {
  if (const auto* b = std::get_if<BernoulliLoss>(&m)) return b->p;
  const auto& g = std::get<GilbertElliottLoss>(m);
  const double total = g.p_good_to_bad + g.p_bad_to_good;
  if (total <= 0.0) return g.good_loss;  // never leaves the starting (good) state
  const double pi_bad = g.p_good_to_bad / total;
  return (1.0 - pi_bad) * g.good_loss + pi_bad * g.bad_loss;
}

std::string to_string(const MechanismSpec& m) {
  switch (m.kind) {
    case Mechanism::kBaseline: return "baseline";
    case Mechanism::kAutoRec: return "autorec";
    case Mechanism::kAutoRecNoOpportunistic: return "autorec-no-opportunistic";
    case Mechanism::kFixedK: return "fixed-k:" + std::to_string(m.fixed_k);
  }
  return "?";
}

MechanismSpec parse_mechanism(const std::string& s) {
  if (s == "baseline") return {Mechanism::kBaseline, 0};
  if (s == "autorec") return {Mechanism::kAutoRec, 0};
  if (s == "autorec-no-opportunistic") return {Mechanism::kAutoRecNoOpportunistic, 0};
  constexpr std::string_view prefix = "fixed-k:";
  if (s.starts_with(prefix)) {
    const std::string num = s.substr(prefix.size());
    std::size_t used = 0;
    int k = -1;
    try {
      k = std::stoi(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || num.empty()) fail("mechanism", "bad fixed K in '" + s + "'");
    return {Mechanism::kFixedK, k};
  }
  fail("mechanism", "expected baseline, autorec, autorec-no-opportunistic or fixed-k:K, got '" + s + "'");
  return {};
}

void ExperimentConfig::validate() const {
  if (link.bandwidth_bps == 0) fail("link.bandwidth_bps", "must be > 0");
  if (link.rtt < Duration::zero()) fail("link.rtt_ms", "must be >= 0");
  if (const auto* b = std::get_if<BernoulliLoss>(&link.loss)) {
    check_fraction("link.loss.p", b->p);
    if (b->p >= 1.0) fail("link.loss.p", "must be < 1 so every unit is eventually delivered");
  } else {
    const auto& g = std::get<GilbertElliottLoss>(link.loss);
    check_fraction("link.loss.good_loss", g.good_loss);
    check_fraction("link.loss.bad_loss", g.bad_loss);
    check_fraction("link.loss.p_good_to_bad", g.p_good_to_bad);
    check_fraction("link.loss.p_bad_to_good", g.p_bad_to_good);
    if (g.state_step <= Duration::zero()) fail("link.loss.state_step_ms", "must be > 0");
  }
  if (traffic.bitrate_bps == 0) fail("traffic.bitrate_bps", "must be > 0");
  if (traffic.frame_rate == 0) fail("traffic.frame_rate", "must be > 0");
  if (traffic.bitrate_bps / traffic.frame_rate / 8 == 0) {
    fail("traffic.bitrate_bps", "too small for one byte per frame");
  }
  if (traffic.duration < Duration::zero()) fail("traffic.duration_s", "must be >= 0");
  if (!(tolerances.alpha.count() >= 0.0)) fail("tolerances.alpha_ms", "must be >= 0");
  check_fraction("tolerances.beta", tolerances.beta);
  check_fraction("tolerances.gamma", tolerances.gamma);
  if (k_max < 0) fail("k_max", "must be >= 0");
  if (decision_interval_rtts < 1) fail("decision_interval_rtts", "must be >= 1");
  if (mechanism.kind == Mechanism::kFixedK && (mechanism.fixed_k < 0 || mechanism.fixed_k > k_max)) {
    fail("mechanism", "fixed K must lie in [0, k_max]");
  }
  if (replications < 1) fail("replications", "must be >= 1");
  if (drain < Duration::zero()) fail("drain_s", "must be >= 0");
  if (startup_buffer < Duration::zero()) fail("startup_buffer_ms", "must be >= 0");
  if (playback_deadline && *playback_deadline <= Duration::zero()) {
    fail("playback_deadline_ms", "must be > 0");
  }
}

RecoveryConfig ExperimentConfig::recovery() const {
  RecoveryConfig r;
  r.tolerances = tolerances;
  r.k_max = k_max;
  r.decision_interval_rtts = decision_interval_rtts;
  switch (mechanism.kind) {
    case Mechanism::kBaseline:
      r.reinjection = false;
      break;
    case Mechanism::kAutoRec:
      r.reinjection = true;
      break;
    case Mechanism::kAutoRecNoOpportunistic:
      r.reinjection = true;
      r.opportunistic = false;
      break;
    case Mechanism::kFixedK:
      r.reinjection = true;
      r.fixed_k = mechanism.fixed_k;
      break;
  }
  return r;
}

ExperimentConfig ExperimentConfig::as_baseline() const {
  ExperimentConfig c = *this;
  c.mechanism = {Mechanism::kBaseline, 0};
  return c;
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{
      {"link",
       {{"bandwidth_bps", c.link.bandwidth_bps},
        {"rtt_ms", ms_of(c.link.rtt)},
        {"loss", loss_to_json(c.link.loss)}}},
      {"traffic",
       {{"bitrate_bps", c.traffic.bitrate_bps},
        {"frame_rate", c.traffic.frame_rate},
        {"duration_s", static_cast<double>(c.traffic.duration.count()) / 1e6}}},
      {"tolerances",
       {{"alpha_ms", c.tolerances.alpha.count()},
        {"beta", c.tolerances.beta},
        {"gamma", c.tolerances.gamma}}},
      {"k_max", c.k_max},
      {"decision_interval_rtts", c.decision_interval_rtts},
      {"mechanism", to_string(c.mechanism)},
      {"seed", c.seed},
      {"replications", c.replications},
      {"drain_s", static_cast<double>(c.drain.count()) / 1e6},
      {"startup_buffer_ms", ms_of(c.startup_buffer)},
      {"playback_deadline_ms",
       c.playback_deadline ? json(ms_of(*c.playback_deadline)) : json(nullptr)},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j, "", {"link", "traffic", "tolerances", "k_max", "decision_interval_rtts",
                         "mechanism", "seed", "replications", "drain_s", "startup_buffer_ms",
                         "playback_deadline_ms"});
  if (j.contains("link")) {
    const auto& l = j.at("link");
    reject_unknown(l, "link", {"bandwidth_bps", "rtt_ms", "loss"});
    read(l, "bandwidth_bps", "link.", c.link.bandwidth_bps);
    read_ms(l, "rtt_ms", "link.", c.link.rtt);
    if (l.contains("loss")) c.link.loss = loss_from_json(l.at("loss"));
  }
  if (j.contains("traffic")) {
    const auto& t = j.at("traffic");
    reject_unknown(t, "traffic", {"bitrate_bps", "frame_rate", "duration_s"});
    read(t, "bitrate_bps", "traffic.", c.traffic.bitrate_bps);
    read(t, "frame_rate", "traffic.", c.traffic.frame_rate);
    if (t.contains("duration_s")) {
      double s = 0;
      read(t, "duration_s", "traffic.", s);
      c.traffic.duration = from_ms(s * 1000.0);
    }
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    reject_unknown(t, "tolerances", {"alpha_ms", "beta", "gamma"});
    double alpha = c.tolerances.alpha.count();
    read(t, "alpha_ms", "tolerances.", alpha);
    c.tolerances.alpha = Millis{alpha};
    read(t, "beta", "tolerances.", c.tolerances.beta);
    read(t, "gamma", "tolerances.", c.tolerances.gamma);
  }
  read(j, "k_max", "", c.k_max);
  read(j, "decision_interval_rtts", "", c.decision_interval_rtts);
  if (j.contains("mechanism")) {
    std::string m;
    read(j, "mechanism", "", m);
    c.mechanism = parse_mechanism(m);
  }
  read(j, "seed", "", c.seed);
  read(j, "replications", "", c.replications);
  if (j.contains("drain_s")) {
    double s = 0;
    read(j, "drain_s", "", s);
    c.drain = from_ms(s * 1000.0);
  }
  read_ms(j, "startup_buffer_ms", "", c.startup_buffer);
  if (j.contains("playback_deadline_ms")) {
    if (j.at("playback_deadline_ms").is_null()) {
      c.playback_deadline.reset();
    } else {
      Duration d{};
      read_ms(j, "playback_deadline_ms", "", d);
      c.playback_deadline = d;
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) { return json(c).dump(2); }

std::uint64_t pairing_hash(const ExperimentConfig& c) {
  json j = c;
  j.erase("mechanism");
  j.erase("seed");
  j.erase("replications");
  return fnv1a(j.dump());
}

std::string hash_hex(std::uint64_t h) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
  return s;
}

}  // namespace autorec
