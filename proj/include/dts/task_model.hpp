#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dts/energy.hpp"
#include "dts/errors.hpp"

namespace dts {

/// One packet: it arrives, must leave by its deadline, and carries `bits`.
struct Task {
  std::size_t id = 0;  // 1-based position in the instance
  double arrival = 0.0;
  double deadline = 0.0;
  std::uint64_t bits = 0;
  std::string energy;    // key into Instance::energy_functions()
  double tau_min = 0.0;  // seconds per bit at max power; 0 = unconstrained

  friend bool operator==(const Task&, const Task&) = default;
};

/// An FCFS task sequence together with its energy-function table. Immutable
/// once constructed; construction validates every invariant.
class Instance {
 public:
  using EnergyTable = std::map<std::string, EnergyPtr>;

  Instance(std::vector<Task> tasks, EnergyTable energy_functions, std::string note = {})
      : tasks_(std::move(tasks)), energy_(std::move(energy_functions)), note_(std::move(note)) {
    validate();
  }

  std::size_t size() const { return tasks_.size(); }
  const std::vector<Task>& tasks() const { return tasks_; }
  const Task& task(std::size_t index) const { return tasks_[index]; }
  const EnergyTable& energy_functions() const { return energy_; }
  const std::string& note() const { return note_; }

  /// Energy function of the task at 0-based `index`.
  const EnergyFunction& energy_of(std::size_t index) const { return *resolved_[index]; }
  std::span<const EnergyFunction* const> resolved_energy() const { return resolved_; }

  friend bool operator==(const Instance& a, const Instance& b) {
    if (a.tasks_ != b.tasks_ || a.note_ != b.note_ || a.energy_.size() != b.energy_.size()) {
      return false;
    }
    for (const auto& [name, fn] : a.energy_) {
      const auto it = b.energy_.find(name);
      if (it == b.energy_.end() || it->second->describe() != fn->describe()) return false;
    }
    return true;
  }

 private:
  void validate() {
    if (tasks_.empty()) throw ValidationError("instance has no tasks");
    resolved_.clear();
    resolved_.reserve(tasks_.size());
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const Task& t = tasks_[i];
      const std::string where = "task " + std::to_string(t.id) + ": ";
      if (t.id != i + 1) {
        throw ValidationError(where + "ids must be 1..N in order (expected " +
                                  std::to_string(i + 1) + ")",
                              t.id);
      }
      if (!std::isfinite(t.arrival) || !std::isfinite(t.deadline)) {
        throw ValidationError(where + "arrival and deadline must be finite", t.id);
      }
      if (!(t.deadline > t.arrival)) {
        throw ValidationError(where + "deadline must be later than arrival", t.id);
      }
      if (t.bits == 0) throw ValidationError(where + "bits must be positive", t.id);
      if (!(t.tau_min >= 0.0) || !std::isfinite(t.tau_min)) {
        throw ValidationError(where + "tau_min must be finite and >= 0", t.id);
      }
      if (i > 0 && t.arrival < tasks_[i - 1].arrival) {
        throw ValidationError(where + "arrivals must be nondecreasing", t.id);
      }
      const auto it = energy_.find(t.energy);
      if (it == energy_.end() || !it->second) {
        throw ValidationError(where + "unknown energy function '" + t.energy + "'", t.id);
      }
      resolved_.push_back(it->second.get());
    }
  }

  std::vector<Task> tasks_;
  EnergyTable energy_;
  std::string note_;
  std::vector<const EnergyFunction*> resolved_;
};

/// Column view of a task range, the form the solvers work on. Energy
/// pointers borrow from the owning Instance.
struct TaskArrays {
  std::vector<double> arrival;
  std::vector<double> deadline;
  std::vector<double> bits;
  std::vector<double> tau_min;
  std::vector<const EnergyFunction*> energy;
  std::vector<std::size_t> ids;

  std::size_t size() const { return arrival.size(); }

  void reserve(std::size_t n) {
    arrival.reserve(n);
    deadline.reserve(n);
    bits.reserve(n);
    tau_min.reserve(n);
    energy.reserve(n);
    ids.reserve(n);
  }

  void push_back(const Instance& inst, std::size_t index) {
    const Task& t = inst.task(index);
    arrival.push_back(t.arrival);
    deadline.push_back(t.deadline);
    bits.push_back(static_cast<double>(t.bits));
    tau_min.push_back(t.tau_min);
    energy.push_back(&inst.energy_of(index));
    ids.push_back(t.id);
  }

  /// Tasks [first, last] (0-based, inclusive) of an instance.
  static TaskArrays from(const Instance& inst, std::size_t first, std::size_t last) {
    TaskArrays out;
    out.reserve(last - first + 1);
    for (std::size_t m = first; m <= last; ++m) out.push_back(inst, m);
    return out;
  }

  static TaskArrays from(const Instance& inst) { return from(inst, 0, inst.size() - 1); }
};

enum class ScheduleStatus { Optimal, ClampedNearOptimal, Infeasible };
enum class CriticalKind { None, Left, Right };

inline const char* to_string(ScheduleStatus s) {
  switch (s) {
    case ScheduleStatus::Optimal: return "optimal";
    case ScheduleStatus::ClampedNearOptimal: return "clamped_near_optimal";
    case ScheduleStatus::Infeasible: return "infeasible";
  }
  return "?";
}

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::None: return "none";
    case CriticalKind::Left: return "left";
    case CriticalKind::Right: return "right";
  }
  return "?";
}

/// Per-task controls (seconds per bit) and departure times.
struct Schedule {
  std::vector<double> controls;
  std::vector<double> departures;
  std::vector<CriticalKind> critical;
  double total_cost = 0.0;
  ScheduleStatus status = ScheduleStatus::Optimal;
  std::optional<std::size_t> violating_task;  // 1-based, set when Infeasible
};

/// Slack allowed when comparing a departure with its deadline.
inline double time_tolerance(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

/// Departures from the FCFS max-plus recursion x_i = max(x_{i-1}, a_i) + v_i tau_i,
/// x_0 = 0.
inline std::vector<double> departures_from_controls(const Instance& inst,
                                                    std::span<const double> controls) {
  std::vector<double> x(inst.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Task& t = inst.task(i);
    prev = std::max(prev, t.arrival) + static_cast<double>(t.bits) * controls[i];
    x[i] = prev;
  }
  return x;
}

/// Total energy sum_i v_i w_i(tau_i).
inline double schedule_cost(const Instance& inst, std::span<const double> controls) {
  double cost = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    cost += static_cast<double>(inst.task(i).bits) * inst.energy_of(i).eval(controls[i]);
  }
  return cost;
}

/// 0-based index of the first task departing after its deadline (beyond
/// time_tolerance), if any.
inline std::optional<std::size_t> first_deadline_miss(const Instance& inst,
                                                      std::span<const double> departures) {
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const double d = inst.task(i).deadline;
    if (departures[i] > d + time_tolerance(d)) return i;
  }
  return std::nullopt;
}

/// Fills departures and cost from controls, marking the schedule Infeasible
/// on the first deadline miss.
inline void finalize_schedule(const Instance& inst, Schedule& s) {
  s.departures = departures_from_controls(inst, s.controls);
  s.total_cost = schedule_cost(inst, s.controls);
  if (s.critical.size() != inst.size()) s.critical.assign(inst.size(), CriticalKind::None);
  if (const auto miss = first_deadline_miss(inst, s.departures)) {
    s.status = ScheduleStatus::Infeasible;
    s.violating_task = *miss + 1;
  }
}

}  // namespace dts
