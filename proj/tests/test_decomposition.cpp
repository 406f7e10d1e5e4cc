#include <gtest/gtest.h>

#include "dts/decomposition.hpp"
#include "dts/gctda.hpp"
#include "test_support.hpp"

namespace dts {
namespace {

Instance from_windows(const std::vector<double>& a, const std::vector<double>& d,
                      std::uint64_t bits = 1) {
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < a.size(); ++i) tasks.push_back({i + 1, a[i], d[i], bits, "f", 0.0});
  return Instance(tasks, {{"f", inverse_power_energy(1.0, 1.0)}});
}

TEST(Decomposition, DeadlineBeforeNextArrivalCuts) {
  const auto bps = partition_busy_periods(from_windows({0, 5}, {4, 9}));
  ASSERT_EQ(bps.size(), 2u);
  EXPECT_EQ(bps[0], (BusyPeriod{0, 0, 0.0}));
  EXPECT_EQ(bps[1], (BusyPeriod{1, 1, 5.0}));
}

TEST(Decomposition, OverlappingWindowsChain) {
  const auto bps = partition_busy_periods(from_windows({0, 3}, {4, 9}));
  ASSERT_EQ(bps.size(), 1u);
  EXPECT_EQ(bps[0], (BusyPeriod{0, 1, 0.0}));
}

TEST(Decomposition, DeadlineEqualToNextArrivalKeepsPeriod) {
  EXPECT_EQ(partition_busy_periods(from_windows({0, 4}, {4, 9})).size(), 1u);
}

TEST(Decomposition, FiveTaskExample) {
  // d_1 = 3 >= a_2 = 2 chains tasks 1 and 2.
  const auto bps = partition_busy_periods(from_windows({0, 2, 4, 10, 25}, {3, 9, 9, 20, 30}));
  ASSERT_EQ(bps.size(), 3u);
  EXPECT_EQ(bps[0], (BusyPeriod{0, 2, 0.0}));
  EXPECT_EQ(bps[1], (BusyPeriod{3, 3, 10.0}));
  EXPECT_EQ(bps[2], (BusyPeriod{4, 4, 25.0}));
}

TEST(Decomposition, ArrayAndInstanceFormsAgree) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = testing::random_small_instance(seed, 12);
    EXPECT_EQ(partition_busy_periods(inst), partition_busy_periods(TaskArrays::from(inst)));
  }
}

TEST(DecompositionProperties, CoverBoundaryAndChaining) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Instance inst = testing::random_small_instance(seed, 1 + seed % 15, true, 2.0);
    const auto bps = partition_busy_periods(inst);
    std::size_t next = 0;
    for (const BusyPeriod& bp : bps) {
      ASSERT_EQ(bp.first, next);
      ASSERT_LE(bp.first, bp.last);
      EXPECT_EQ(bp.start, inst.task(bp.first).arrival);
      if (bp.first > 0) EXPECT_LT(inst.task(bp.first - 1).deadline, inst.task(bp.first).arrival);
      if (bp.last + 1 < inst.size()) EXPECT_LT(inst.task(bp.last).deadline, inst.task(bp.last + 1).arrival);
      for (std::size_t i = bp.first; i < bp.last; ++i) {
        EXPECT_GE(inst.task(i).deadline, inst.task(i + 1).arrival);
      }
      next = bp.last + 1;
    }
    EXPECT_EQ(next, inst.size());
  }
}

TEST(DecompositionProperties, IgnoresBitsAndEnergy) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = testing::random_small_instance(seed, 10, true, 2.0);
    std::vector<Task> tasks = inst.tasks();
    for (Task& t : tasks) {
      t.bits = t.bits * 7 + 3;
      t.energy = "g";
    }
    const Instance other(tasks, {{"g", inverse_power_energy(2.0, 3.0)}});
    EXPECT_EQ(partition_busy_periods(inst), partition_busy_periods(other));
  }
}

// The optimal path ends every period at its last deadline and never idles
// inside a period.
TEST(DecompositionProperties, OptimalPathRespectsPeriods) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Instance inst = testing::random_small_instance(seed, 10, true, 2.0);
    const Schedule s = solve_p1(inst);
    ASSERT_EQ(s.status, ScheduleStatus::Optimal);
    for (const BusyPeriod& bp : partition_busy_periods(inst)) {
      const double d = inst.task(bp.last).deadline;
      EXPECT_NEAR(s.departures[bp.last], d, 1e-9 * std::max(1.0, d));
      for (std::size_t i = bp.first; i < bp.last; ++i) {
        const double a = inst.task(i + 1).arrival;
        EXPECT_GE(s.departures[i], a - 1e-9 * std::max(1.0, a));
      }
    }
  }
}

}  // namespace
}  // namespace dts
