#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "autorec/adapter.h"
#include "autorec/arq.h"
#include "autorec/core.h"

namespace autorec {

struct BernoulliLoss {
  double p = 0.05;
};

// Two-state Markov channel. The state is redrawn every `state_step` on a
// fixed lattice, independent of packet arrivals.
struct GilbertElliottLoss {
  double good_loss = 0.01;
  double bad_loss = 0.40;
  double p_good_to_bad = 0.20;
  double p_bad_to_good = 0.80;
  Duration state_step = std::chrono::milliseconds(30);
};

using LossModel = std::variant<BernoulliLoss, GilbertElliottLoss>;

// Long-run fraction of dropped packets.
double stationary_loss_rate(const LossModel& m);

struct LinkConfig {
  std::uint64_t bandwidth_bps = 12'000'000;
  Duration rtt = std::chrono::milliseconds(60);  // split evenly between directions
  LossModel loss = BernoulliLoss{};

  Duration one_way_delay() const { return rtt / 2; }
};

struct TrafficConfig {
  std::uint64_t bitrate_bps = 4'000'000;
  std::uint32_t frame_rate = 60;
  Duration duration = std::chrono::seconds(60);
};

enum class Mechanism : std::uint8_t { kBaseline, kAutoRec, kAutoRecNoOpportunistic, kFixedK };

struct MechanismSpec {
  Mechanism kind = Mechanism::kAutoRec;
  int fixed_k = 0;  // used by kFixedK only

  friend bool operator==(const MechanismSpec&, const MechanismSpec&) = default;
};

// "baseline", "autorec", "autorec-no-opportunistic", "fixed-k:K".
std::string to_string(const MechanismSpec& m);
MechanismSpec parse_mechanism(const std::string& s);

struct ExperimentConfig {
  LinkConfig link;
  TrafficConfig traffic;
  Tolerances tolerances;
  int k_max = kDefaultKMax;
  int decision_interval_rtts = kDefaultDecisionIntervalRtts;
  MechanismSpec mechanism;
  std::uint64_t seed = 1;
  int replications = 1;
  // Extra simulated time after the last frame for outstanding recovery.
  Duration drain = std::chrono::seconds(30);
  // Player model used by the freezing metrics.
  Duration startup_buffer = std::chrono::seconds(1);
  // Frame deadline measured from generation; deadline accounting is off when unset.
  std::optional<Duration> playback_deadline;

  // Throws std::invalid_argument whose message starts with the offending field.
  void validate() const;
  RecoveryConfig recovery() const;
  // Same run with reinjection switched off.
  ExperimentConfig as_baseline() const;
};

// JSON config. Missing keys keep their defaults; unknown keys are rejected.
// Both loaders validate the result.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& c);

// FNV-1a of the canonical JSON with mechanism, seed and replications removed.
// Runs that differ only in mechanism share a hash, which pairs AutoRec runs
// with their baseline.
std::uint64_t pairing_hash(const ExperimentConfig& c);
std::string hash_hex(std::uint64_t h);

}  // namespace autorec
