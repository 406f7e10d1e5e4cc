#pragma once

#include <cstddef>
#include <vector>

#include "dts/task_model.hpp"

namespace dts {

/// Contiguous block of tasks [first, last] (0-based, inclusive) that the
/// optimal schedule serves without idling.
struct BusyPeriod {
  std::size_t first = 0;
  std::size_t last = 0;
  double start = 0.0;  // arrival of `first`

  std::size_t size() const { return last - first + 1; }
  friend bool operator==(const BusyPeriod&, const BusyPeriod&) = default;
};

/// Busy periods of the optimal sample path. Task i closes a period iff
/// d_i < a_{i+1}; a deadline equal to the next arrival keeps both tasks in
/// one period. Only arrivals and deadlines matter.
inline std::vector<BusyPeriod> partition_busy_periods(const Instance& inst) {
  std::vector<BusyPeriod> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const bool last = i + 1 == inst.size() || inst.task(i).deadline < inst.task(i + 1).arrival;
    if (last) {
      out.push_back({first, i, inst.task(first).arrival});
      first = i + 1;
    }
  }
  return out;
}

inline std::vector<BusyPeriod> partition_busy_periods(const TaskArrays& tasks) {
  std::vector<BusyPeriod> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i + 1 == tasks.size() || tasks.deadline[i] < tasks.arrival[i + 1]) {
      out.push_back({first, i, tasks.arrival[first]});
      first = i + 1;
    }
  }
  return out;
}

}  // namespace dts
