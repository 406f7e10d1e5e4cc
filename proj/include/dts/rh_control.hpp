#pragma once

// On-line receding-horizon control. At each decision point the controller
// sees the tasks arriving within H seconds, plans them with GCTDA under a
// worst-case guess about the first unseen task, and commits only the control
// of the next task.
//
// Decision point for task t+1: x = max(x~_t, a_{t+1}).
// Planning horizon: h = last task with a_h <= x + H. Unless h = N, the
// unseen task h+1 may arrive at x + H with no slack, so the plan must finish
// by then: d~_h = min(d_h, x + H).
// Relaxed horizon: with max-rate service x^_j from x, S holds every j < h
// whose prefix t+1..j meets min(d_i, a_{j+1}); h^ = max S, and
// d^_{h^} = min(d_{h^}, a_{h^+1}).
// Policy per decision:
//   1. plan t+1..h with d~; apply tau~_{t+1} if no planned tau is below tau_min;
//   2. else, if h^ exists, plan t+1..h^ with d^ and apply under the same test;
//   3. else apply tau_min of task t+1.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "dts/gctda.hpp"
#include "dts/task_model.hpp"

namespace dts {

struct RhConfig {
  double window = 5.0;  // H, seconds
  bool power_constrained = true;
  SolverConfig solver;
};

enum class RhStep { QTilde, QHat, TauMinFallback };

inline const char* to_string(RhStep s) {
  switch (s) {
    case RhStep::QTilde: return "q_tilde";
    case RhStep::QHat: return "q_hat";
    case RhStep::TauMinFallback: return "tau_min";
  }
  return "?";
}

/// Tasks t+1..h (0-based `first`..`last`) as planned at one decision point.
struct PlanningHorizon {
  std::size_t first = 0;
  std::size_t last = 0;
  double decision_time = 0.0;
  bool finalized = false;  // h = N: no worst-case cut
  std::vector<double> deadline;  // d~ for first..last
};

struct RelaxedHorizon {
  std::size_t last = 0;  // 0-based h^
  std::vector<double> deadline;  // d^ for first..last
};

/// `t` tasks have departed, the last at `x_t` (0 when t = 0).
inline PlanningHorizon build_planning_horizon(const TaskArrays& tasks, std::size_t t, double x_t,
                                              double window) {
  if (t >= tasks.size()) throw ParameterError("build_planning_horizon: no task left to plan");
  if (!(window > 0.0)) throw ParameterError("planning window must be positive");
  PlanningHorizon hz;
  hz.first = t;
  hz.decision_time = std::max(x_t, tasks.arrival[t]);
  const double edge = hz.decision_time + window;
  const auto it = std::upper_bound(tasks.arrival.begin() + static_cast<long>(t), tasks.arrival.end(), edge);
  hz.last = static_cast<std::size_t>(it - tasks.arrival.begin()) - 1;
  hz.finalized = hz.last + 1 == tasks.size();
  hz.deadline.assign(tasks.deadline.begin() + static_cast<long>(hz.first),
                     tasks.deadline.begin() + static_cast<long>(hz.last + 1));
  if (!hz.finalized) hz.deadline.back() = std::min(hz.deadline.back(), edge);
  return hz;
}

inline PlanningHorizon build_planning_horizon(const Instance& inst, std::size_t t, double x_t,
                                              double window) {
  return build_planning_horizon(TaskArrays::from(inst), t, x_t, window);
}

/// h^ for the horizon, or nullopt when S is empty.
inline std::optional<RelaxedHorizon> compute_h_hat(const TaskArrays& tasks,
                                                   const PlanningHorizon& hz) {
  std::optional<std::size_t> best;
  double x = hz.decision_time;
  for (std::size_t j = hz.first; j < hz.last; ++j) {
    x = std::max(x, tasks.arrival[j]) + tasks.bits[j] * tasks.tau_min[j];
    if (x > tasks.deadline[j]) break;
    if (x <= tasks.arrival[j + 1]) best = j;
  }
  if (!best) return std::nullopt;
  RelaxedHorizon rx;
  rx.last = *best;
  rx.deadline.assign(tasks.deadline.begin() + static_cast<long>(hz.first),
                     tasks.deadline.begin() + static_cast<long>(rx.last + 1));
  rx.deadline.back() = std::min(rx.deadline.back(), tasks.arrival[rx.last + 1]);
  return rx;
}

inline std::optional<RelaxedHorizon> compute_h_hat(const Instance& inst, std::size_t t, double x_t,
                                                   const PlanningHorizon& hz) {
  PlanningHorizon at = hz;
  at.decision_time = std::max(x_t, inst.task(t).arrival);
  return compute_h_hat(TaskArrays::from(inst), at);
}

struct RhDecision {
  double control = 0.0;
  RhStep step = RhStep::QTilde;
  std::size_t horizon_last = 0;  // 0-based h
};

namespace detail {

// Planned controls for tasks first..first+deadline.size()-1 starting at
// `start`, or nullopt when the subproblem is infeasible.
inline std::optional<std::vector<double>> plan(const TaskArrays& tasks, std::size_t first,
                                               double start, const std::vector<double>& deadline,
                                               const SolverConfig& cfg,
                                               const DerivativeTables* tables) {
  TaskArrays sub;
  const std::size_t n = deadline.size();
  sub.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = first + k;
    sub.arrival.push_back(std::max(tasks.arrival[m], start));
    sub.deadline.push_back(deadline[k]);
    sub.bits.push_back(tasks.bits[m]);
    sub.tau_min.push_back(tasks.tau_min[m]);
    sub.energy.push_back(tasks.energy[m]);
    sub.ids.push_back(tasks.ids[m]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(sub.deadline[k] > sub.arrival[k])) return std::nullopt;
  }
  ArraySolution sol = solve_tasks(sub, cfg, tables);
  if (sol.violating) return std::nullopt;
  return std::move(sol.controls);
}

inline bool respects_tau_min(const TaskArrays& tasks, std::size_t first,
                             const std::vector<double>& controls, bool power_constrained) {
  if (!power_constrained) return true;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    if (controls[k] < tasks.tau_min[first + k] * (1.0 - 1e-12)) return false;
  }
  return true;
}

}  // namespace detail

/// One decision of the policy for task t+1 (0-based index t).
inline RhDecision rh_step(const TaskArrays& tasks, std::size_t t, double x_t, const RhConfig& cfg,
                          const DerivativeTables* tables = nullptr) {
  const PlanningHorizon hz = build_planning_horizon(tasks, t, x_t, cfg.window);
  RhDecision out;
  out.horizon_last = hz.last;
  const double start = hz.decision_time;

  const auto q_tilde = detail::plan(tasks, t, start, hz.deadline, cfg.solver, tables);
  if (q_tilde && detail::respects_tau_min(tasks, t, *q_tilde, cfg.power_constrained)) {
    out.control = q_tilde->front();
    out.step = RhStep::QTilde;
    return out;
  }
  if (const auto rx = compute_h_hat(tasks, hz)) {
    const auto q_hat = detail::plan(tasks, t, start, rx->deadline, cfg.solver, tables);
    if (q_hat && detail::respects_tau_min(tasks, t, *q_hat, cfg.power_constrained)) {
      out.control = q_hat->front();
      out.step = RhStep::QHat;
      return out;
    }
  }
  out.step = RhStep::TauMinFallback;
  const double tau_min = cfg.power_constrained ? tasks.tau_min[t] : 0.0;
  if (tau_min > 0.0) {
    out.control = tau_min;
    return out;
  }
  // No rate limit to fall back on: plan the visible tasks against their own
  // deadlines, without the worst-case cut.
  std::vector<double> real(tasks.deadline.begin() + static_cast<long>(t),
                           tasks.deadline.begin() + static_cast<long>(hz.last + 1));
  const auto relaxed = detail::plan(tasks, t, start, real, cfg.solver, tables);
  out.control = relaxed ? relaxed->front() : tasks.tau_min[t];
  return out;
}

inline RhDecision rh_step(const Instance& inst, std::size_t t, double x_t, const RhConfig& cfg) {
  return rh_step(TaskArrays::from(inst), t, x_t, cfg);
}

struct RhRecord {
  double decision_time = 0.0;
  std::size_t horizon_last = 0;  // 1-based h
  RhStep used_step = RhStep::QTilde;
  double applied_control = 0.0;
  double departure = 0.0;
  double compute_seconds = 0.0;
};

struct RhTrace {
  std::vector<RhRecord> records;  // one per task, in order
  double total_cost = 0.0;
  bool feasible = true;
  std::optional<std::size_t> first_miss;  // 1-based id
  double compute_seconds = 0.0;

  double mean_compute_seconds() const {
    return records.empty() ? 0.0 : compute_seconds / static_cast<double>(records.size());
  }
};

/// Runs the controller over the whole instance, committing each task's
/// energy when its control is applied.
inline RhTrace simulate_rh(const Instance& inst, const RhConfig& cfg) {
  if (!(cfg.window > 0.0)) throw ParameterError("planning window must be positive");
  const TaskArrays tasks = TaskArrays::from(inst);
  std::optional<DerivativeTables> tables;
  if (cfg.solver.mode == SolveMode::TableLookup) tables = make_tables(inst, cfg.solver);

  RhTrace trace;
  trace.records.reserve(tasks.size());
  double x = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const RhDecision d = rh_step(tasks, t, x, cfg, tables ? &*tables : nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    RhRecord r;
    r.decision_time = std::max(x, tasks.arrival[t]);
    r.horizon_last = d.horizon_last + 1;
    r.used_step = d.step;
    r.applied_control = d.control;
    r.departure = r.decision_time + tasks.bits[t] * d.control;
    r.compute_seconds = std::chrono::duration<double>(t1 - t0).count();
    trace.compute_seconds += r.compute_seconds;
    trace.total_cost += tasks.bits[t] * tasks.energy[t]->eval(d.control);
    if (r.departure > tasks.deadline[t] + time_tolerance(tasks.deadline[t]) && trace.feasible) {
      trace.feasible = false;
      trace.first_miss = tasks.ids[t];
    }
    x = r.departure;
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace dts
