#include "autorec/reinjection.h"

#include <stdexcept>

namespace autorec {
namespace {

bool can_take_replica(const ReinjectionEntry& e, int k_theta) {
  return k_theta > 0 && e.reinjections < static_cast<std::uint32_t>(k_theta);
}

}  // namespace

void ReinjectionQueue::on_retransmitted(DataId data, SimTime now) {
  if (auto it = index_.find(data); it != index_.end()) {
    it->second->last_sent = now;
    move_to_tail(it->second);
    return;
  }
  std::uint32_t count = 0;
  if (auto ex = exhausted_.find(data); ex != exhausted_.end()) {
    count = ex->second;
    exhausted_.erase(ex);
  }
  order_.push_back({data, count, now});
  index_.emplace(data, std::prev(order_.end()));
}

void ReinjectionQueue::on_acked(DataId data) {
  exhausted_.erase(data);
  if (auto it = index_.find(data); it != index_.end()) {
    order_.erase(it->second);
    index_.erase(it);
  }
}

std::optional<DataId> ReinjectionQueue::peek_reinjectable(int k_theta) {
  while (!order_.empty() && !can_take_replica(order_.front(), k_theta)) {
    drop(order_.begin());
  }
  if (order_.empty()) return std::nullopt;
  return order_.front().data;
}

std::optional<DataId> ReinjectionQueue::reinject_one(SimTime now, int k_theta) {
  auto head = peek_reinjectable(k_theta);
  if (!head) return std::nullopt;
  auto it = order_.begin();
  ++it->reinjections;
  it->last_sent = now;
  move_to_tail(it);
  return head;
}

std::vector<DataId> ReinjectionQueue::opportunistic_due(SimTime now, Duration t_thres,
                                                        int k_theta) const {
  std::vector<DataId> due;
  for (const auto& e : order_) {
    if (now - e.last_sent <= t_thres) break;  // sorted by last_sent
    if (can_take_replica(e, k_theta)) due.push_back(e.data);
  }
  return due;
}

bool ReinjectionQueue::reinject(DataId data, SimTime now, int k_theta) {
  auto it = index_.find(data);
  if (it == index_.end()) return false;
  auto entry = it->second;
  if (!can_take_replica(*entry, k_theta)) {
    drop(entry);
    return false;
  }
  ++entry->reinjections;
  entry->last_sent = now;
  move_to_tail(entry);
  return true;
}

const ReinjectionEntry* ReinjectionQueue::find(DataId data) const {
  auto it = index_.find(data);
  return it == index_.end() ? nullptr : &*it->second;
}

void ReinjectionQueue::move_to_tail(std::list<ReinjectionEntry>::iterator it) {
  order_.splice(order_.end(), order_, it);
}

void ReinjectionQueue::drop(std::list<ReinjectionEntry>::iterator it) {
  exhausted_[it->data] = it->reinjections;
  index_.erase(it->data);
  order_.erase(it);
}

Duration compute_t_thres(Duration t_unit, int k_theta) {
  if (t_unit < Duration::zero()) throw std::invalid_argument("T_unit must be >= 0");
  if (k_theta < 0) throw std::invalid_argument("K_theta must be >= 0");
  const std::int64_t d = k_theta + 1;
  return Duration{(t_unit.count() * 2 + d) / (2 * d)};
}

ReinjectionController::ReinjectionController(bool opportunistic_enabled)
    : opportunistic_enabled_(opportunistic_enabled) {}

void ReinjectionController::on_acked(DataId data) {
  queue_.on_acked(data);
  if (pending_set_.erase(data) > 0) pending_.remove(data);
}

void ReinjectionController::update(int k_theta, std::optional<Duration> t_unit) {
  k_theta_ = k_theta;
  if (opportunistic_enabled_ && t_unit) {
    t_thres_ = compute_t_thres(*t_unit, k_theta);
  } else {
    t_thres_.reset();
  }
}

void ReinjectionController::poll_opportunistic(SimTime now) {
  if (!t_thres_ || k_theta_ <= 0) return;
  queue_.peek_reinjectable(k_theta_);
  for (DataId d : queue_.opportunistic_due(now, *t_thres_, k_theta_)) {
    if (pending_set_.insert(d).second) pending_.push_back(d);
  }
}

std::optional<SimTime> ReinjectionController::next_opportunistic_deadline() const {
  if (!t_thres_ || k_theta_ <= 0) return std::nullopt;
  for (const auto& e : queue_.entries()) {
    if (pending_set_.contains(e.data) || !can_take_replica(e, k_theta_)) continue;
    return e.last_sent + *t_thres_ + Duration{1};
  }
  return std::nullopt;
}

bool ReinjectionController::still_due(DataId data, SimTime now) const {
  if (!t_thres_) return false;
  const auto* e = queue_.find(data);
  return e != nullptr && can_take_replica(*e, k_theta_) && now - e->last_sent > *t_thres_;
}

std::optional<DataId> ReinjectionController::peek_opportunistic(SimTime now) {
  while (!pending_.empty()) {
    DataId d = pending_.front();
    if (still_due(d, now)) return d;
    pending_.pop_front();
    pending_set_.erase(d);
  }
  return std::nullopt;
}

bool ReinjectionController::take_opportunistic(DataId data, SimTime now) {
  if (!still_due(data, now)) return false;
  if (pending_set_.erase(data) > 0) pending_.remove(data);
  return queue_.reinject(data, now, k_theta_);
}

std::uint32_t ReinjectionController::reinjections_of(DataId data) const {
  const auto* e = queue_.find(data);
  return e ? e->reinjections : 0;
}

}  // namespace autorec
