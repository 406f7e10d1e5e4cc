#include <cmath>

#include <gtest/gtest.h>

#include "dts/decomposition.hpp"
#include "dts/gctda.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

namespace dts {
namespace {

using testing::random_small_instance;
using testing::rel_diff;

Instance homogeneous(const std::vector<double>& a, const std::vector<double>& d,
                     const std::vector<std::uint64_t>& bits, EnergyPtr f = inverse_power_energy(1.0, 1.0),
                     const std::vector<double>& tau_min = {}) {
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < a.size(); ++i) {
    tasks.push_back({i + 1, a[i], d[i], bits[i], "f", tau_min.empty() ? 0.0 : tau_min[i]});
  }
  return Instance(tasks, {{"f", std::move(f)}});
}

BusyPeriodView whole_view(const Instance& inst) {
  return BusyPeriodView::from(inst, BusyPeriod{0, inst.size() - 1, inst.task(0).arrival}, {});
}

TEST(Anchors, Definitions) {
  const Instance inst = homogeneous({0, 1, 2}, {5, 6, 7}, {1, 1, 1});
  const BusyPeriodView bp = whole_view(inst);
  EXPECT_DOUBLE_EQ(t1_anchor(bp, 0, 99.0), 0.0);
  EXPECT_DOUBLE_EQ(t1_anchor(bp, 1, 3.5), 3.5);
  EXPECT_DOUBLE_EQ(t2_anchor(bp, 2), 7.0);
  EXPECT_DOUBLE_EQ(t2_anchor(bp, 1), 2.0);
}

TEST(FindFirstCritical, SingleTaskHasNone) {
  const BusyPeriodView bp = whole_view(homogeneous({0}, {4}, {2}));
  EXPECT_FALSE(find_first_critical(bp, 0, 0.0).has_value());
}

TEST(FindFirstCritical, HomogeneousSlackHasNone) {
  const BusyPeriodView bp = whole_view(homogeneous({0, 1}, {10, 10}, {1, 1}));
  EXPECT_FALSE(find_first_critical(bp, 0, 0.0).has_value());
}

TEST(FindFirstCritical, TightMiddleDeadlineIsRightCritical) {
  const BusyPeriodView bp = whole_view(homogeneous({0, 0, 0}, {10, 1.5, 10}, {1, 1, 1}));
  const auto c = find_first_critical(bp, 0, 0.0);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->index, 1u);
  EXPECT_EQ(c->kind, CriticalKind::Right);
  EXPECT_DOUBLE_EQ(c->departure, 1.5);
}

TEST(FindFirstCritical, LateArrivalIsLeftCritical) {
  // Task 1 would like the whole window but task 2 cannot start before 4 and
  // must finish by 4.5.
  const BusyPeriodView bp = whole_view(homogeneous({0, 4}, {10, 4.5}, {1, 1}));
  const auto c = find_first_critical(bp, 0, 0.0);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->index, 0u);
  EXPECT_EQ(c->kind, CriticalKind::Left);
  EXPECT_DOUBLE_EQ(c->departure, 4.0);
}

TEST(SolveBp, SingleTaskUsesWholeWindow) {
  BusyPeriodView bp = whole_view(homogeneous({1}, {5}, {2}));
  const auto sol = solve_bp(bp);
  EXPECT_DOUBLE_EQ(sol.controls[0], 2.0);
}

TEST(SolveBp, HomogeneousCommonWindowMatchesSolveNe) {
  const Instance inst = homogeneous({0, 0, 0, 0}, {8, 8, 8, 8}, {1, 2, 3, 2});
  const Schedule s = solve_p1(inst);
  const NeSolution ne = solve_ne(inst, 0, 3, 0.0, 8.0);
  EXPECT_NEAR(s.total_cost, schedule_cost(inst, ne.controls), 1e-12);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(s.controls[i], s.controls[0]);
}

TEST(SolveBp, ThreeTaskRightCriticalExample) {
  const Instance inst = homogeneous({0, 0, 0}, {10, 1.5, 10}, {1, 1, 1});
  const Schedule s = solve_p1(inst);
  ASSERT_EQ(s.status, ScheduleStatus::Optimal);
  // Tasks 1-2 share (0, 1.5); task 3 takes (1.5, 10).
  EXPECT_NEAR(s.controls[0], 0.75, 1e-12);
  EXPECT_NEAR(s.controls[1], 0.75, 1e-12);
  EXPECT_NEAR(s.controls[2], 8.5, 1e-12);
  EXPECT_EQ(s.critical[1], CriticalKind::Right);
  const double expected = 2.0 / 0.75 + 1.0 / 8.5;
  EXPECT_NEAR(s.total_cost, expected, 1e-12);
  EXPECT_LT(rel_diff(oracle::barrier_solve(inst).cost, expected), 1e-6);
  EXPECT_LT(rel_diff(oracle::grid_solve(inst).cost, expected), 1e-6);
}

TEST(SolveP1, SingleTask) {
  const Instance inst = homogeneous({2}, {7}, {5}, inverse_power_energy(3.0, 2.0));
  const Schedule s = solve_p1(inst);
  EXPECT_DOUBLE_EQ(s.total_cost, 5.0 * 3.0 / 1.0);
  EXPECT_DOUBLE_EQ(s.departures[0], 7.0);
}

TEST(SolveP1, SingletonPeriodsEndAtDeadlines) {
  const Instance inst = homogeneous({0, 5, 9, 20}, {4, 8, 15, 21}, {3, 1, 2, 4});
  ASSERT_EQ(partition_busy_periods(inst).size(), 4u);
  const Schedule s = solve_p1(inst);
  for (std::size_t i = 0; i < inst.size(); ++i) EXPECT_DOUBLE_EQ(s.departures[i], inst.task(i).deadline);
}

TEST(SolveP1, MatchesOracleOnRandomSixTaskInstances) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const Instance inst = random_small_instance(seed, 6);
    const Schedule s = solve_p1(inst);
    ASSERT_EQ(s.status, ScheduleStatus::Optimal) << "seed " << seed;
    const double ref = oracle::barrier_solve(inst).cost;
    EXPECT_LT(rel_diff(s.total_cost, ref), 1e-6) << "seed " << seed;
  }
}

TEST(SolveP1, StrictDomainThrowsOnSaturation) {
  const Instance inst({{1, 0.0, 100.0, 1, "s", 0.0}}, {{"s", shannon_energy(1.0, 1.0, 1.0)}});
  EXPECT_THROW(solve_p1(inst), DomainSaturation);
  SolverConfig cfg;
  cfg.ne.idle_beyond_cap = true;
  const Schedule s = solve_p1(inst, cfg);
  EXPECT_EQ(s.status, ScheduleStatus::Optimal);
  EXPECT_DOUBLE_EQ(s.controls[0], std::log(2.0));
}

TEST(SolveP1, IdleBeyondCapMatchesOracle) {
  SolverConfig cfg;
  cfg.ne.idle_beyond_cap = true;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Instance inst = random_small_instance(seed, 6, true, 1.0, 0.2);
    const Schedule s = solve_p1(inst, cfg);
    ASSERT_EQ(s.status, ScheduleStatus::Optimal) << "seed " << seed;
    EXPECT_LT(rel_diff(s.total_cost, oracle::barrier_solve(inst).cost), 1e-6) << "seed " << seed;
  }
}

TEST(SolveP1, TableLookupIsFeasibleAndClose) {
  SolverConfig cfg;
  cfg.mode = SolveMode::TableLookup;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Instance inst = random_small_instance(seed, 8);
    const Schedule exact = solve_p1(inst);
    const Schedule tl = solve_p1(inst, cfg);
    ASSERT_NE(tl.status, ScheduleStatus::Infeasible) << "seed " << seed;
    EXPECT_GE(tl.total_cost, exact.total_cost * (1.0 - 1e-9));
    EXPECT_LT(rel_diff(tl.total_cost, exact.total_cost), 0.05) << "seed " << seed;
  }
}

// Structural certificate: departures at criticals, equal derivatives inside
// segments, derivative jumps of the right sign at criticals.
void expect_certificate(const Instance& inst, const Schedule& s, const std::string& label) {
  for (const BusyPeriod& bp : partition_busy_periods(inst)) {
    for (std::size_t i = bp.first; i < bp.last; ++i) {
      const double wi = inst.energy_of(i).deriv(s.controls[i]);
      const double wn = inst.energy_of(i + 1).deriv(s.controls[i + 1]);
      const double x = s.departures[i];
      switch (s.critical[i]) {
        case CriticalKind::Left:
          EXPECT_NEAR(x, inst.task(i + 1).arrival, time_tolerance(x)) << label << " task " << i + 1;
          EXPECT_GT(wi, wn) << label << " task " << i + 1;
          break;
        case CriticalKind::Right:
          EXPECT_NEAR(x, inst.task(i).deadline, time_tolerance(x)) << label << " task " << i + 1;
          EXPECT_LT(wi, wn) << label << " task " << i + 1;
          break;
        case CriticalKind::None:
          EXPECT_LT(rel_diff(wi, wn), 1e-7) << label << " task " << i + 1;
          break;
      }
    }
  }
}

TEST(Certificate, HoldsOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Instance inst = random_small_instance(seed, 2 + seed % 12, true, 0.5);
    const Schedule s = solve_p1(inst);
    ASSERT_EQ(s.status, ScheduleStatus::Optimal);
    expect_certificate(inst, s, "seed " + std::to_string(seed));
  }
}

// Moving time between two tasks of one period without breaking
// feasibility never lowers the cost.
TEST(Exchange, PerturbationsDoNotImprove) {
  WorkloadRng rng(77);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = random_small_instance(seed, 8, true, 0.5);
    const Schedule s = solve_p1(inst);
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = rng.integer(0, inst.size() - 1);
      const std::size_t j = rng.integer(0, inst.size() - 1);
      if (i == j) continue;
      const double delta = rng.uniform(-1.0, 1.0) * 1e-3 * s.controls[i] * static_cast<double>(inst.task(i).bits);
      std::vector<double> tau = s.controls;
      tau[i] += delta / static_cast<double>(inst.task(i).bits);
      tau[j] -= delta / static_cast<double>(inst.task(j).bits);
      if (!inst.energy_of(i).in_domain(tau[i]) || !inst.energy_of(j).in_domain(tau[j])) continue;
      if (first_deadline_miss(inst, departures_from_controls(inst, tau))) continue;
      const double c = schedule_cost(inst, tau);
      EXPECT_GE(c, s.total_cost * (1.0 - 1e-9)) << "seed " << seed;
    }
  }
}

TEST(CheckFeasibilityP2, NoPowerLimitIsFeasible) {
  const Instance inst = homogeneous({0, 0}, {1, 1}, {100, 100});
  EXPECT_TRUE(check_feasibility_p2(inst).feasible);
}

TEST(CheckFeasibilityP2, SingleTaskTooSlow) {
  const Instance inst = homogeneous({0}, {1}, {4}, inverse_power_energy(1.0, 1.0), {0.5});
  const auto r = check_feasibility_p2(inst);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.task, std::optional<std::size_t>(1));
}

TEST(CheckFeasibilityP2, ChainOverrunsMiddleDeadline) {
  // Max-rate departures 2, 4, 6 against deadlines 5, 3.5, 20.
  const Instance inst = homogeneous({0, 0, 0}, {5, 3.5, 20}, {1, 1, 1}, inverse_power_energy(1.0, 1.0),
                                    {2, 2, 2});
  const auto r = check_feasibility_p2(inst);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.task, std::optional<std::size_t>(2));
}

TEST(SolveP2, SlackInstanceEqualsP1) {
  const Instance inst = homogeneous({0, 1, 2}, {6, 7, 9}, {1, 2, 1}, inverse_power_energy(1.0, 1.0),
                                    {0.01, 0.01, 0.01});
  const Schedule p1 = solve_p1(inst);
  const Schedule p2 = solve_p2(inst);
  EXPECT_EQ(p2.status, ScheduleStatus::Optimal);
  EXPECT_EQ(p2.controls, p1.controls);
}

TEST(SolveP2, HomogeneousTightPeriodIsInfeasible) {
  const Instance inst = homogeneous({0, 0, 0}, {3, 3, 2.5}, {1, 1, 1}, inverse_power_energy(1.0, 1.0),
                                    {1, 1, 1});
  EXPECT_LT(solve_p1(inst).controls[0], 1.0);
  const Schedule s = solve_p2(inst);
  EXPECT_EQ(s.status, ScheduleStatus::Infeasible);
  EXPECT_EQ(s.violating_task, std::optional<std::size_t>(3));
}

TEST(SolveP2, HeterogeneousClampStaysFeasible) {
  const Instance inst({{1, 0.0, 10.0, 1, "cheap", 1.0}, {2, 0.0, 10.0, 1, "dear", 0.5}},
                      {{"cheap", inverse_power_energy(1.0, 1.0)}, {"dear", inverse_power_energy(100.0, 1.0)}});
  const Schedule p1 = solve_p1(inst);
  ASSERT_LT(p1.controls[0], 1.0);
  ASSERT_GE(p1.controls[0], 0.5);
  const Schedule s = solve_p2(inst);
  EXPECT_EQ(s.status, ScheduleStatus::ClampedNearOptimal);
  EXPECT_FALSE(first_deadline_miss(inst, s.departures).has_value());
  EXPECT_GE(s.total_cost, p1.total_cost);
  for (std::size_t i = 0; i < inst.size(); ++i) EXPECT_GE(s.controls[i], inst.task(i).tau_min);
}

TEST(SolveP2, OutputRespectsTauMinOrIsInfeasible) {
  WorkloadRng rng(5);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Instance base = random_small_instance(seed, 8, false, 0.5);
    std::vector<Task> tasks = base.tasks();
    for (Task& t : tasks) t.tau_min = rng.uniform(0.0, 0.5) * (t.deadline - t.arrival) / static_cast<double>(t.bits);
    Instance::EnergyTable table = base.energy_functions();
    const Instance inst(tasks, table);
    const Schedule s = solve_p2(inst);
    if (s.status == ScheduleStatus::Infeasible) continue;
    EXPECT_FALSE(first_deadline_miss(inst, s.departures).has_value()) << "seed " << seed;
    for (std::size_t i = 0; i < inst.size(); ++i) EXPECT_GE(s.controls[i], inst.task(i).tau_min);
  }
}

// Smallest relative slack d_i - x_i of the max-rate schedule.
double max_rate_slack(const Instance& inst) {
  double x = 0.0, slack = std::numeric_limits<double>::infinity();
  for (const Task& t : inst.tasks()) {
    x = std::max(x, t.arrival) + static_cast<double>(t.bits) * t.tau_min;
    slack = std::min(slack, (t.deadline - x) / (t.deadline - t.arrival));
  }
  return slack;
}

TEST(SolveP2, FlooredResolveMatchesConstrainedOracle) {
  WorkloadRng rng(17);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Instance base = random_small_instance(seed, 2 + seed % 7);
    const Schedule p1 = solve_p1(base);
    std::vector<Task> tasks = base.tasks();
    for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].tau_min = p1.controls[i] * rng.uniform(0.5, 1.3);
    const Instance inst(tasks, base.energy_functions());
    const Schedule s = solve_p2(inst);
    if (s.status != ScheduleStatus::ClampedNearOptimal || max_rate_slack(inst) < 0.01) continue;
    EXPECT_FALSE(first_deadline_miss(inst, s.departures).has_value()) << "seed " << seed;
    for (std::size_t i = 0; i < inst.size(); ++i) EXPECT_GE(s.controls[i], inst.task(i).tau_min);
    EXPECT_LT(rel_diff(s.total_cost, oracle::barrier_solve(inst, 1e-12, true).cost), 1e-6) << "seed " << seed;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

}  // namespace
}  // namespace dts
