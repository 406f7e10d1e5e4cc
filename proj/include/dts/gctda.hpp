#pragma once

// Generalized Critical Task Decomposition Algorithm (GCTDA).
//
// Within one busy period {k..n} the optimal derivative sequence w_i'(tau_i*)
// is piecewise constant and only jumps at critical tasks. A left-critical
// task departs at the next arrival, a right-critical one at its own deadline.
// Starting from task p with start time T1, the scan over i = p+1..n keeps
//   R_i = largest-index minimizer of sigma_{p,s}(T1, d_s)
//   L_i = largest-index maximizer of sigma_{p,s}(T1, T2(s))
// over s in {p..i-1}, where T2(s) = a_{s+1} for s < n and d_n for s = n.
// The first i with sigma_{p,i}(T1, T2(i)) > sigma_{p,R_i}(T1, d_{R_i}) makes
// R_i right-critical; otherwise the first i with
// sigma_{p,i}(T1, d_i) < sigma_{p,L_i}(T1, a_{L_i+1}) makes L_i left-critical.
// The segment up to the critical task is one equal-derivative NE solve, and
// the scan restarts after it. If no critical task appears, the remainder is
// solved over (T1, d_n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dts/decomposition.hpp"
#include "dts/energy.hpp"
#include "dts/errors.hpp"
#include "dts/ne_solver.hpp"
#include "dts/task_model.hpp"

namespace dts {

enum class PowerMode { Unconstrained, ClampAndFlag };

struct SolverConfig {
  SolveMode mode = SolveMode::Exact;
  NeOptions ne;
  PowerMode power_mode = PowerMode::Unconstrained;
  /// Relative margin for the critical-task inequalities; near-ties count as
  /// non-critical.
  double tie_margin = 1e-9;
  /// Table-lookup grid. When the bounds are unset they are derived from the
  /// instance (see make_tables).
  std::size_t table_size = 1000;
  std::optional<double> table_tau_lo;
  std::optional<double> table_tau_hi;
};

struct CriticalTask {
  std::size_t index = 0;  // 0-based position in the busy period
  CriticalKind kind = CriticalKind::None;
  double departure = 0.0;  // a_{index+1} if Left, d_index if Right
};

/// Working copy of one busy period. Arrivals are mutable here (they get
/// lifted after a right-critical task); the instance itself is untouched.
struct BusyPeriodView {
  std::vector<double> arrival;
  std::vector<double> deadline;
  std::vector<std::size_t> ids;
  NeProblem ne;

  std::size_t size() const { return arrival.size(); }
  std::size_t last() const { return arrival.size() - 1; }

  static BusyPeriodView from(const TaskArrays& tasks, const BusyPeriod& bp,
                             const SolverConfig& cfg, const DerivativeTables* tables = nullptr) {
    const auto b = static_cast<long>(bp.first);
    const auto e = static_cast<long>(bp.last + 1);
    return BusyPeriodView{{tasks.arrival.begin() + b, tasks.arrival.begin() + e},
                          {tasks.deadline.begin() + b, tasks.deadline.begin() + e},
                          {tasks.ids.begin() + b, tasks.ids.begin() + e},
                          NeProblem::for_tasks(tasks, bp.first, bp.last, cfg.ne, tables)};
  }

  static BusyPeriodView from(const Instance& inst, const BusyPeriod& bp, const SolverConfig& cfg,
                             const DerivativeTables* tables = nullptr) {
    return from(TaskArrays::from(inst, bp.first, bp.last), BusyPeriod{0, bp.size() - 1, bp.start},
                cfg, tables);
  }
};

/// Start time of task p: the period's first arrival when p is its first task,
/// otherwise the departure of task p-1.
inline double t1_anchor(const BusyPeriodView& bp, std::size_t p, double prior_departure) {
  return p == 0 ? bp.arrival[0] : prior_departure;
}

/// Earliest end time of task i in the period: a_{i+1}, or d_n for the last
/// task.
inline double t2_anchor(const BusyPeriodView& bp, std::size_t i) {
  return i < bp.last() ? bp.arrival[i + 1] : bp.deadline[bp.last()];
}

namespace detail {

inline bool clearly_above(double a, double b, double margin) {
  return a > b + margin * std::max(std::abs(a), std::abs(b));
}

// a > b by more than the margin; saturated windows compare by idle time.
inline bool clearly_greater(Slope a, Slope b, double margin) {
  if (a.is_negative_infinity()) return false;
  if (b.is_negative_infinity()) return true;
  if (clearly_above(a.value(), b.value(), margin)) return true;
  if (clearly_above(b.value(), a.value(), margin)) return false;
  return clearly_above(a.idle(), b.idle(), margin);
}

// a <= b, with near-ties counted as equal.
inline bool at_most(Slope a, Slope b, double margin) { return !clearly_greater(a, b, margin); }

}  // namespace detail

/// First critical task of the tasks p..n of a busy period when task p starts
/// at t_start, or nullopt when p..n form a single equal-derivative segment.
inline std::optional<CriticalTask> find_first_critical(const BusyPeriodView& bp, std::size_t p,
                                                       double t_start, double margin = 1e-9) {
  const std::size_t n = bp.last();
  if (p >= n) return std::nullopt;
  const NeProblem& ne = bp.ne;
  std::size_t right = p;
  Slope right_best = ne.sigma(p, p, t_start, bp.deadline[p]);
  std::size_t left = p;
  Slope left_best = ne.sigma(p, p, t_start, t2_anchor(bp, p));
  for (std::size_t i = p + 1; i <= n; ++i) {
    const Slope to_next = ne.sigma(p, i, t_start, t2_anchor(bp, i));
    if (detail::clearly_greater(to_next, right_best, margin)) {
      return CriticalTask{right, CriticalKind::Right, bp.deadline[right]};
    }
    const Slope to_deadline = ne.sigma(p, i, t_start, bp.deadline[i]);
    if (detail::clearly_greater(left_best, to_deadline, margin)) {
      return CriticalTask{left, CriticalKind::Left, bp.arrival[left + 1]};
    }
    if (detail::at_most(to_deadline, right_best, margin)) {
      right = i;
      right_best = std::min(right_best, to_deadline);
    }
    if (detail::at_most(left_best, to_next, margin)) {
      left = i;
      left_best = std::max(left_best, to_next);
    }
  }
  return std::nullopt;
}

/// Controls and critical marks for one busy period.
struct BusyPeriodSolution {
  std::vector<double> controls;
  std::vector<CriticalKind> critical;
  std::vector<CriticalTask> criticals;
  bool feasible = true;
  std::size_t violating = 0;  // 0-based within the period when !feasible
};

/// Solves Q(k, n) for one busy period by repeated first-critical-task
/// identification. The view's arrivals are lifted in place.
inline BusyPeriodSolution solve_bp(BusyPeriodView& bp, const SolverConfig& cfg = {}) {
  BusyPeriodSolution out;
  const std::size_t n = bp.last();
  out.controls.assign(bp.size(), 0.0);
  out.critical.assign(bp.size(), CriticalKind::None);

  auto fill = [&](std::size_t from, std::size_t to, double t1, double t2) {
    if (!(t2 > t1)) {
      out.feasible = false;
      out.violating = to;
      return false;
    }
    const NeSolution s = bp.ne.solve(from, to, t1, t2);
    std::copy(s.controls.begin(), s.controls.end(), out.controls.begin() + static_cast<long>(from));
    return true;
  };

  std::size_t p = 0;
  double t1 = t1_anchor(bp, 0, 0.0);
  while (true) {
    const auto c = find_first_critical(bp, p, t1, cfg.tie_margin);
    if (!c) {
      fill(p, n, t1, bp.deadline[n]);
      return out;
    }
    if (!fill(p, c->index, t1, c->departure)) return out;
    out.critical[c->index] = c->kind;
    out.criticals.push_back(*c);
    if (c->kind == CriticalKind::Right) {
      for (std::size_t j = c->index + 1; j <= n; ++j) bp.arrival[j] = std::max(bp.arrival[j], c->departure);
    }
    t1 = c->departure;
    p = c->index + 1;
  }
}

/// Derivative tables covering every tau a solve of `inst` can need: from
/// the shortest window over the largest busy-period bit count up to the
/// longest window over the smallest task, clipped to each domain cap.
inline DerivativeTables make_tables(const Instance& inst, const SolverConfig& cfg) {
  double min_window = std::numeric_limits<double>::infinity();
  double max_span = 0.0;
  double min_bits = std::numeric_limits<double>::infinity();
  double max_bp_bits = 0.0;
  for (const BusyPeriod& bp : partition_busy_periods(inst)) {
    double bits = 0.0;
    for (std::size_t m = bp.first; m <= bp.last; ++m) {
      const Task& t = inst.task(m);
      bits += static_cast<double>(t.bits);
      min_bits = std::min(min_bits, static_cast<double>(t.bits));
      min_window = std::min(min_window, t.deadline - t.arrival);
    }
    max_bp_bits = std::max(max_bp_bits, bits);
    max_span = std::max(max_span, inst.task(bp.last).deadline - bp.start);
  }
  const double lo = cfg.table_tau_lo.value_or(0.5 * min_window / max_bp_bits);
  const double hi = cfg.table_tau_hi.value_or(max_span / min_bits);
  DerivativeTables tables;
  for (const auto& [name, fn] : inst.energy_functions()) {
    const double cap = fn->tau_cap();
    tables.add(fn, std::min(lo, 0.5 * cap), std::min(hi, cap), cfg.table_size);
  }
  return tables;
}

/// GCTDA result over a task array: controls and critical marks, or the
/// 0-based index of the first task no schedule can serve in time.
struct ArraySolution {
  std::vector<double> controls;
  std::vector<CriticalKind> critical;
  std::optional<std::size_t> violating;
};

/// Shortens any control whose realized departure passes its deadline.
/// Table lookups can end a task slightly before the next arrival, and the
/// resulting idle gap delays every later task of the period.
inline void repair_deadlines(const TaskArrays& tasks, const BusyPeriod& bp,
                             std::vector<double>& controls) {
  double x = 0.0;
  for (std::size_t m = bp.first; m <= bp.last; ++m) {
    const double start = std::max(x, tasks.arrival[m]);
    x = start + tasks.bits[m] * controls[m];
    if (x > tasks.deadline[m] && tasks.deadline[m] > start) {
      controls[m] = (tasks.deadline[m] - start) / tasks.bits[m];
      x = start + tasks.bits[m] * controls[m];
    }
  }
}

/// Busy-period decomposition, then GCTDA on every period.
inline ArraySolution solve_tasks(const TaskArrays& tasks, const SolverConfig& cfg = {},
                                 const DerivativeTables* tables = nullptr) {
  ArraySolution out;
  out.controls.assign(tasks.size(), 0.0);
  out.critical.assign(tasks.size(), CriticalKind::None);
  for (const BusyPeriod& bp : partition_busy_periods(tasks)) {
    BusyPeriodView view = BusyPeriodView::from(tasks, bp, cfg, tables);
    BusyPeriodSolution sol;
    try {
      sol = solve_bp(view, cfg);
    } catch (const ParameterError&) {
      sol.feasible = false;
      sol.violating = 0;
    }
    std::copy(sol.controls.begin(), sol.controls.end(),
              out.controls.begin() + static_cast<long>(bp.first));
    if (tables && sol.feasible) repair_deadlines(tasks, bp, out.controls);
    std::copy(sol.critical.begin(), sol.critical.end(),
              out.critical.begin() + static_cast<long>(bp.first));
    if (!sol.feasible && !out.violating) out.violating = bp.first + sol.violating;
  }
  return out;
}

/// Off-line problem without power limits.
inline Schedule solve_p1(const Instance& inst, const SolverConfig& cfg = {}) {
  std::optional<DerivativeTables> tables;
  if (cfg.mode == SolveMode::TableLookup) tables = make_tables(inst, cfg);
  ArraySolution sol = solve_tasks(TaskArrays::from(inst), cfg, tables ? &*tables : nullptr);
  Schedule s;
  s.controls = std::move(sol.controls);
  s.critical = std::move(sol.critical);
  s.status = ScheduleStatus::Optimal;
  if (sol.violating) {
    s.status = ScheduleStatus::Infeasible;
    s.violating_task = inst.task(*sol.violating).id;
    s.departures = departures_from_controls(inst, s.controls);
    s.total_cost = std::numeric_limits<double>::infinity();
    return s;
  }
  finalize_schedule(inst, s);
  return s;
}

struct P2Feasibility {
  bool feasible = true;
  std::optional<std::size_t> task;  // 1-based id of the first miss
};

/// Whether serving every task at its maximum rate (tau_min) meets all
/// deadlines. By max-plus monotonicity this decides feasibility of the
/// power-constrained problem exactly.
inline P2Feasibility check_feasibility_p2(const Instance& inst) {
  double x = 0.0;
  for (const Task& t : inst.tasks()) {
    x = std::max(x, t.arrival) + static_cast<double>(t.bits) * t.tau_min;
    if (x > t.deadline + time_tolerance(t.deadline)) return {false, t.id};
  }
  return {};
}

/// Schedule with every task at tau_min.
inline Schedule max_rate_schedule(const Instance& inst) {
  Schedule s;
  s.controls.resize(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) s.controls[i] = inst.task(i).tau_min;
  s.status = ScheduleStatus::ClampedNearOptimal;
  finalize_schedule(inst, s);
  return s;
}

/// Copy of `inst` whose tasks with tau_min > 0 get their energy function
/// floored at tau_min, under a per-task name.
inline Instance with_rate_floors(const Instance& inst) {
  Instance::EnergyTable table = inst.energy_functions();
  std::vector<Task> tasks = inst.tasks();
  for (Task& t : tasks) {
    if (!(t.tau_min > 0.0)) continue;
    const EnergyPtr& f = table.at(t.energy);
    if (!(t.tau_min < f->tau_cap())) continue;
    std::string name = t.energy + "#floor" + std::to_string(t.id);
    table.emplace(name, floored_energy(f, t.tau_min));
    t.energy = std::move(name);
  }
  return Instance(std::move(tasks), std::move(table));
}

/// GCTDA on the floored functions: every equal-derivative window runs its
/// tasks at max(tau_min, inverse derivative). Exact mode only.
inline std::optional<Schedule> solve_with_floors(const Instance& inst, const SolverConfig& cfg) {
  SolverConfig exact = cfg;
  exact.mode = SolveMode::Exact;
  Schedule s;
  try {
    s = solve_p1(with_rate_floors(inst), exact);
  } catch (const DomainSaturation&) {
    return std::nullopt;
  }
  if (s.status != ScheduleStatus::Optimal) return std::nullopt;
  for (std::size_t i = 0; i < inst.size(); ++i) s.controls[i] = std::max(s.controls[i], inst.task(i).tau_min);
  s.status = ScheduleStatus::ClampedNearOptimal;
  s.violating_task.reset();
  finalize_schedule(inst, s);
  if (s.status == ScheduleStatus::Infeasible) return std::nullopt;
  return s;
}

/// Off-line problem with per-task minimum time per bit.
///
/// Infeasible when even max-rate service misses a deadline. Otherwise the
/// unconstrained optimum is returned if it already respects every tau_min.
/// If not, violators are clamped to tau_min (ClampedNearOptimal). When the
/// clamped schedule misses a deadline, a busy period with some
/// tau_i* < inf_period tau_min is reported Infeasible (the condition under
/// which the power-limited period problem has no solution when the energy
/// functions order like their tau_min). Otherwise GCTDA is rerun with each
/// energy function floored at its tau_min (ClampedNearOptimal), and the
/// max-rate schedule is the last resort.
inline Schedule solve_p2(const Instance& inst, const SolverConfig& cfg = {}) {
  const P2Feasibility feas = check_feasibility_p2(inst);
  if (!feas.feasible) {
    Schedule s = max_rate_schedule(inst);
    s.status = ScheduleStatus::Infeasible;
    s.violating_task = feas.task;
    return s;
  }
  Schedule p1 = solve_p1(inst, cfg);
  if (p1.status == ScheduleStatus::Infeasible) return p1;
  bool clamped = false;
  Schedule s = p1;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (s.controls[i] < inst.task(i).tau_min) {
      s.controls[i] = inst.task(i).tau_min;
      clamped = true;
    }
  }
  if (!clamped) return p1;
  s.status = ScheduleStatus::ClampedNearOptimal;
  s.violating_task.reset();
  finalize_schedule(inst, s);
  if (s.status != ScheduleStatus::Infeasible) return s;

  for (const BusyPeriod& bp : partition_busy_periods(inst)) {
    double inf_tau_min = std::numeric_limits<double>::infinity();
    for (std::size_t m = bp.first; m <= bp.last; ++m) {
      inf_tau_min = std::min(inf_tau_min, inst.task(m).tau_min);
    }
    for (std::size_t m = bp.first; m <= bp.last; ++m) {
      if (p1.controls[m] < inf_tau_min) {
        Schedule bad = s;
        bad.status = ScheduleStatus::Infeasible;
        bad.violating_task = inst.task(m).id;
        return bad;
      }
    }
  }
  if (auto floored = solve_with_floors(inst, cfg)) return *floored;
  return max_rate_schedule(inst);
}

}  // namespace dts
