#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "autorec/core.h"

namespace autorec {

// One row of the status table: lost data that has been resent but not yet
// acknowledged.
struct ReinjectionEntry {
  DataId data;
  std::uint32_t reinjections = 0;  // A_i
  SimTime last_sent;               // T_stmp: last retransmission or reinjection
  friend bool operator==(const ReinjectionEntry&, const ReinjectionEntry&) = default;
};

// Reinjection queue ordered by last send time (head = oldest). All updates
// touch only the head, the tail or a single indexed entry, so the order is
// maintained without sorting.
class ReinjectionQueue {
 public:
  // Inserts freshly retransmitted data at the tail. Data already queued is
  // moved to the tail with its reinjection count preserved. Data dropped
  // earlier for exhausting its replicas comes back with its old count.
  void on_retransmitted(DataId data, SimTime now);
  // Acknowledgement of any attempt ends reinjection for that data.
  void on_acked(DataId data);

  // Off-mode drain step: drops head entries that cannot take another replica
  // under k_theta, then reinjects the new head (count + 1, stamped `now`,
  // moved to the tail).
  std::optional<DataId> reinject_one(SimTime now, int k_theta);
  // The entry reinject_one would emit, after the same lazy drops.
  std::optional<DataId> peek_reinjectable(int k_theta);

  // Entries silent for longer than t_thres that may still take a replica,
  // in queue order.
  std::vector<DataId> opportunistic_due(SimTime now, Duration t_thres, int k_theta) const;
  // Reinjects a specific entry if it may still take a replica.
  bool reinject(DataId data, SimTime now, int k_theta);

  const ReinjectionEntry* find(DataId data) const;
  bool contains(DataId data) const { return index_.contains(data); }
  bool exhausted(DataId data) const { return exhausted_.contains(data); }
  std::size_t exhausted_count() const { return exhausted_.size(); }
  bool empty() const { return order_.empty(); }
  std::size_t size() const { return order_.size(); }
  const std::list<ReinjectionEntry>& entries() const { return order_; }

 private:
  void move_to_tail(std::list<ReinjectionEntry>::iterator it);
  void drop(std::list<ReinjectionEntry>::iterator it);

  std::list<ReinjectionEntry> order_;
  std::unordered_map<DataId, std::list<ReinjectionEntry>::iterator> index_;
  // Reinjection counts of data dropped for exceeding K_theta, kept until
  // acknowledged so a later retransmission cannot reset A_i.
  std::unordered_map<DataId, std::uint32_t> exhausted_;
};

// Silence threshold after which a queued entry is reinjected regardless of
// sender mode: T_unit / (K_theta + 1), rounded half-up to microseconds.
Duration compute_t_thres(Duration t_unit, int k_theta);

// Owns the reinjection queue of one connection plus the opportunistic
// reinjection schedule. Driven by the sender.
class ReinjectionController {
 public:
  explicit ReinjectionController(bool opportunistic_enabled);

  void on_retransmitted(DataId data, SimTime now) { queue_.on_retransmitted(data, now); }
  void on_acked(DataId data);

  // Installs the redundancy level and loss detection time of a new decision
  // interval. Without a T_unit measurement opportunistic reinjection stays off.
  void update(int k_theta, std::optional<Duration> t_unit);

  // Moves entries whose silence exceeds T_thres to the pending list.
  void poll_opportunistic(SimTime now);
  // Next time poll_opportunistic could find a new due entry.
  std::optional<SimTime> next_opportunistic_deadline() const;

  // Next pending opportunistic reinjection that is still valid, without
  // consuming it.
  std::optional<DataId> peek_opportunistic(SimTime now);
  // Applies the reinjection to the entry returned by peek_opportunistic.
  bool take_opportunistic(DataId data, SimTime now);

  std::optional<DataId> peek_off_mode() { return queue_.peek_reinjectable(k_theta_); }
  std::optional<DataId> take_off_mode(SimTime now) { return queue_.reinject_one(now, k_theta_); }

  int k_theta() const { return k_theta_; }
  std::optional<Duration> t_thres() const { return t_thres_; }
  bool opportunistic_enabled() const { return opportunistic_enabled_; }
  const ReinjectionQueue& queue() const { return queue_; }
  std::uint32_t reinjections_of(DataId data) const;

 private:
  bool still_due(DataId data, SimTime now) const;

  bool opportunistic_enabled_;
  ReinjectionQueue queue_;
  int k_theta_ = 0;
  std::optional<Duration> t_thres_;
  std::list<DataId> pending_;
  std::unordered_set<DataId> pending_set_;
};

}  // namespace autorec
