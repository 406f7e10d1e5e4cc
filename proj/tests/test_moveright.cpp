#include <gtest/gtest.h>

#include "dts/decomposition.hpp"
#include "dts/gctda.hpp"
#include "dts/generate.hpp"
#include "dts/moveright.hpp"
#include "test_support.hpp"

namespace dts {
namespace {

using testing::random_small_instance;
using testing::rel_diff;

TEST(MoveRight, SingleTaskConvergesInOnePass) {
  const Instance inst({{1, 1.0, 5.0, 2, "f", 0.0}}, {{"f", inverse_power_energy(1.0, 2.0)}});
  const MoveRightReport r = move_right(inst);
  EXPECT_EQ(r.passes, 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_DOUBLE_EQ(r.final_schedule.controls[0], 2.0);
}

TEST(MoveRight, HomogeneousPairMatchesSolveNeAfterOnePass) {
  const Instance inst({{1, 0.0, 9.0, 1, "f", 0.0}, {2, 1.0, 9.0, 3, "f", 0.0}},
                      {{"f", inverse_power_energy(1.0, 1.0)}});
  const MoveRightReport r = move_right(inst, 1);
  const NeSolution ne = solve_ne(inst, 0, 1, 0.0, 9.0);
  EXPECT_NEAR(r.final_schedule.controls[0], ne.controls[0], 1e-12);
  EXPECT_NEAR(r.final_schedule.controls[1], ne.controls[1], 1e-12);
}

TEST(MoveRight, ConvergesToGctdaOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = random_small_instance(seed, 50, true, 0.7);
    const Schedule opt = solve_p1(inst);
    const MoveRightReport r = move_right(inst, 100000, 1e-10);
    EXPECT_EQ(r.final_schedule.status, ScheduleStatus::Optimal);
    EXPECT_LT(rel_diff(r.final_schedule.total_cost, opt.total_cost), 1e-5) << "seed " << seed;
  }
}

TEST(MoveRight, CostTraceIsNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = random_small_instance(seed, 30, true, 0.7);
    const MoveRightReport r = move_right(inst, 2000, 0.0);
    for (std::size_t k = 1; k < r.cost_trace.size(); ++k) {
      EXPECT_LE(r.cost_trace[k], r.cost_trace[k - 1] * (1.0 + 1e-12)) << "seed " << seed;
    }
  }
}

TEST(MoveRight, TruncatedCostNeverBeatsGctda) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Instance inst = random_small_instance(seed, 40, true, 0.7);
    const double opt = solve_p1(inst).total_cost;
    for (std::size_t passes : {1u, 3u, 10u}) {
      const MoveRightReport r = move_right(inst, passes, 0.0);
      EXPECT_GE(r.final_schedule.total_cost, opt * (1.0 - 1e-9)) << "seed " << seed;
      EXPECT_FALSE(first_deadline_miss(inst, r.final_schedule.departures).has_value());
    }
  }
}

// At the fixed point every adjacent pair in a period has equal derivatives
// or sits at a boundary with the matching derivative order.
TEST(MoveRight, FixedPointConditions) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Instance inst = random_small_instance(seed, 8, true, 0.7);
    const MoveRightReport r = move_right(inst, 200000, 1e-15);
    const Schedule& s = r.final_schedule;
    for (const BusyPeriod& bp : partition_busy_periods(inst)) {
      for (std::size_t i = bp.first; i < bp.last; ++i) {
        const double wi = inst.energy_of(i).deriv(s.controls[i]);
        const double wn = inst.energy_of(i + 1).deriv(s.controls[i + 1]);
        const double x = s.departures[i];
        const bool equal = rel_diff(wi, wn) < 1e-4;
        const bool left = std::abs(x - inst.task(i + 1).arrival) < 1e-7 && wi > wn;
        const bool right = std::abs(x - inst.task(i).deadline) < 1e-7 && wi < wn;
        EXPECT_TRUE(equal || left || right) << "seed " << seed << " task " << i + 1;
      }
    }
  }
}

TEST(MoveRight, HandlesSaturatedShannonWindows) {
  WorkloadOptions opt;
  opt.energy.bandwidth = 5000.0;
  const Instance inst = generate_poisson(60, 0.2, 10.0, 4096, 3, opt);
  SolverConfig cfg;
  cfg.ne.idle_beyond_cap = true;
  const double gctda = solve_p1(inst, cfg).total_cost;
  const MoveRightReport r = move_right(inst, 10000, 1e-12);
  EXPECT_GE(r.final_schedule.total_cost, gctda * (1.0 - 1e-9));
  EXPECT_LT(rel_diff(r.final_schedule.total_cost, gctda), 1e-6);
}

}  // namespace
}  // namespace dts
