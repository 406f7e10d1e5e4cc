#pragma once

// MoveRight baseline: sweep the boundaries between adjacent tasks left to
// right, each time moving the boundary x_i to the point that minimizes the
// pair cost v_i w_i + v_{i+1} w_{i+1} with the start of task i and the end of
// task i+1 held fixed. That minimizer is the equal-derivative solution
// NE(i, i+1; start_i, x_{i+1}) clipped to [a_{i+1}, d_i]. Every move is an
// exact one-dimensional convex minimization, so the cost never increases.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dts/decomposition.hpp"
#include "dts/errors.hpp"
#include "dts/ne_solver.hpp"
#include "dts/task_model.hpp"

namespace dts {

struct MoveRightReport {
  std::size_t passes = 0;
  std::vector<double> cost_trace;  // cost after each pass
  Schedule final_schedule;
  bool converged = false;
};

namespace detail {

inline double controls_cost(const TaskArrays& t, const std::vector<double>& tau) {
  double cost = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) cost += t.bits[i] * t.energy[i]->eval(tau[i]);
  return cost;
}

// Feasible start with uniform time per bit inside each busy period: task i
// takes the largest tau that would let it and every later task of its period
// finish by their deadlines at that same tau.
inline std::vector<double> uniform_controls(const TaskArrays& t) {
  std::vector<double> tau(t.size());
  double prev = 0.0;
  for (const BusyPeriod& bp : partition_busy_periods(t)) {
    for (std::size_t i = bp.first; i <= bp.last; ++i) {
      const double start = std::max(prev, t.arrival[i]);
      double best = t.energy[i]->tau_cap();
      double bits = 0.0;
      for (std::size_t j = i; j <= bp.last; ++j) {
        bits += t.bits[j];
        best = std::min(best, (t.deadline[j] - start) / bits);
      }
      tau[i] = best;
      prev = start + t.bits[i] * best;
    }
  }
  return tau;
}

}  // namespace detail

/// Runs MoveRight for at most `max_passes` sweeps, stopping early once a
/// pass improves the cost by less than `tol` relative.
inline MoveRightReport move_right(const Instance& inst, std::size_t max_passes = 10000,
                                  double tol = 1e-10) {
  const TaskArrays t = TaskArrays::from(inst);
  const std::size_t n = t.size();
  MoveRightReport rep;

  // Any prefix whose earliest completion misses a deadline leaves no
  // feasible start.
  {
    double earliest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      earliest = std::max(earliest, t.arrival[i]);
      if (!(t.deadline[i] > earliest)) {
        rep.final_schedule.status = ScheduleStatus::Infeasible;
        rep.final_schedule.violating_task = t.ids[i];
        return rep;
      }
    }
  }

  // Controls are the state; departures follow from them. A control can be
  // far below the resolution of the departure times it sits between.
  const NeProblem ne = NeProblem::for_tasks(t, 0, n - 1);
  std::vector<double> tau = detail::uniform_controls(t);
  std::vector<double> x(n);
  {
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = prev = std::max(prev, t.arrival[i]) + t.bits[i] * tau[i];
  }
  double cost = detail::controls_cost(t, tau);

  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    double start = t.arrival[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double cap = t.energy[i]->tau_cap();
      const double hi = std::min(t.deadline[i], x[i + 1]);
      double ti = (hi - start) / t.bits[i];
      if (t.arrival[i + 1] <= t.deadline[i]) {
        const double lo = std::max(start, t.arrival[i + 1]);
        try {
          const NeSolution pair = ne.solve(i, i + 1, start, x[i + 1]);
          ti = pair.controls[0];
          if (pair.controls[1] > 0.0) tau[i + 1] = pair.controls[1];
        } catch (const DomainSaturation&) {
          ti = cap;
        }
        const double end = start + t.bits[i] * ti;
        if (end < lo) ti = (lo - start) / t.bits[i];
        if (end > hi) ti = (hi - start) / t.bits[i];
      }
      // A window below the resolution of the departure times keeps the
      // control from the previous pair solve.
      if (ti > 0.0) tau[i] = std::min(ti, cap);
      x[i] = start + t.bits[i] * tau[i];
      start = std::max(x[i], t.arrival[i + 1]);
    }
    const double last = (t.deadline[n - 1] - start) / t.bits[n - 1];
    if (last > 0.0) tau[n - 1] = std::min(last, t.energy[n - 1]->tau_cap());
    x[n - 1] = start + t.bits[n - 1] * tau[n - 1];

    const double next = detail::controls_cost(t, tau);
    rep.cost_trace.push_back(next);
    rep.passes = pass + 1;
    const double delta = cost - next;
    cost = next;
    if (delta <= tol * std::abs(next)) {
      rep.converged = true;
      break;
    }
  }

  Schedule& s = rep.final_schedule;
  s.controls = std::move(tau);
  s.status = ScheduleStatus::Optimal;
  finalize_schedule(inst, s);
  return rep;
}

}  // namespace dts
