#pragma once

// Experiment harness: timed comparison of GCTDA, GCTDA_TL and MoveRight on
// one instance, the four comparison settings, and Monte-Carlo runs of the
// receding-horizon controller against the off-line optimum.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dts/csv.hpp"
#include "dts/errors.hpp"
#include "dts/gctda.hpp"
#include "dts/generate.hpp"
#include "dts/instance_io.hpp"
#include "dts/moveright.hpp"
#include "dts/rh_control.hpp"

namespace dts::bench {

enum class Algorithm { Gctda, GctdaTl, MoveRight };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Gctda: return "GCTDA";
    case Algorithm::GctdaTl: return "GCTDA_TL";
    case Algorithm::MoveRight: return "MoveRight";
  }
  return "?";
}

struct BenchResult {
  Algorithm algorithm = Algorithm::Gctda;
  double wall_time = 0.0;  // seconds, median over runs
  double cost = 0.0;
  std::optional<std::size_t> passes;  // MoveRight only
};

struct BenchOptions {
  std::size_t moveright_passes = 10000;
  /// 0 runs MoveRight until the pass budget or until a pass stops improving.
  double moveright_tol = 0.0;
  int runs = 3;
  SolverConfig solver;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median wall time of `runs` calls of f; only the call itself is timed.
template <typename F>
double median_time(int runs, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < std::max(1, runs); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median(std::move(t));
}

/// FNV-1a of the instance's JSON text, as 16 hex digits.
inline std::string instance_hash(const Instance& inst) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : instance_to_json(inst)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runs the three algorithms on the same instance.
inline std::vector<BenchResult> run_bench(const Instance& inst, const BenchOptions& opt) {
  std::vector<BenchResult> out;

  SolverConfig exact = opt.solver;
  exact.mode = SolveMode::Exact;
  Schedule s;
  BenchResult g{Algorithm::Gctda};
  g.wall_time = median_time(opt.runs, [&] { s = solve_p1(inst, exact); });
  g.cost = s.total_cost;
  out.push_back(g);

  SolverConfig table = opt.solver;
  table.mode = SolveMode::TableLookup;
  BenchResult tl{Algorithm::GctdaTl};
  tl.wall_time = median_time(opt.runs, [&] { s = solve_p1(inst, table); });
  tl.cost = s.total_cost;
  out.push_back(tl);

  MoveRightReport rep;
  BenchResult mr{Algorithm::MoveRight};
  mr.wall_time = median_time(opt.runs, [&] {
    rep = move_right(inst, opt.moveright_passes, opt.moveright_tol);
  });
  mr.cost = rep.final_schedule.total_cost;
  mr.passes = rep.passes;
  out.push_back(mr);
  return out;
}

inline std::vector<csv::BenchRow> to_rows(const std::vector<BenchResult>& results) {
  std::vector<csv::BenchRow> rows;
  for (const BenchResult& r : results) {
    rows.push_back({to_string(r.algorithm), r.wall_time, r.cost, r.passes});
  }
  return rows;
}

/// One of the four comparison settings: distinct or shared deadlines,
/// identical or per-task energy functions.
struct TablePreset {
  int table = 1;
  std::size_t n = 500;
  double rate = 0.2;
  double deadline_offset = 10.0;
  std::uint64_t bits = 4096;
  WorkloadOptions options;
  std::size_t moveright_passes = 10000;

  Instance generate(std::uint64_t seed) const {
    return generate_poisson(n, rate, deadline_offset, bits, seed, options);
  }
};

/// Settings 1-4: Poisson arrivals with mean gap 5 s and bit counts uniform
/// in [2048, 6144]. 1 and 2 draw deadlines a_i + U[5, 20]; 3 and 4 share
/// the deadline a_N + 10. 2 and 4 give every task its own channel gain.
/// 4 has 100 tasks, the others 500. MoveRight budgets are 10000, 100,
/// 10000 and 1000 passes.
inline TablePreset table_preset(int table) {
  if (table < 1 || table > 4) throw ParameterError("table preset must be 1..4");
  TablePreset p;
  p.table = table;
  p.options.bits_range = Range<std::uint64_t>{2048, 6144};
  p.options.energy.bandwidth = 500.0;
  const bool shared_deadline = table >= 3;
  const bool distinct_energy = table == 2 || table == 4;
  if (shared_deadline) {
    p.options.common_deadline = true;
  } else {
    p.options.deadline_range = Range<double>{5.0, 20.0};
  }
  if (distinct_energy) p.options.per_task_gain = Range<double>{0.25, 4.0};
  p.n = table == 4 ? 100 : 500;
  p.moveright_passes = table == 2 ? 100 : table == 4 ? 1000 : 10000;
  return p;
}

/// Parses "lo:hi:step" (or a single value) into a grid of windows.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = spec.find(':', start);
    parts.push_back(csv::to_double(spec.substr(start, colon - start)));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() == 1) parts = {parts[0], parts[0], 1.0};
  if (parts.size() != 3) throw ParameterError("grid must be lo:hi:step");
  const double lo = parts[0], hi = parts[1], step = parts[2];
  if (!(lo > 0.0 && hi >= lo && step > 0.0)) {
    throw ParameterError("grid needs 0 < lo <= hi and step > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

struct RhExperiment {
  std::vector<double> windows;
  std::size_t reps = 1000;
  /// Instance for replication r.
  std::function<Instance(std::size_t)> make_instance;
  RhConfig controller;  // window is overwritten per grid point
  std::size_t threads = 1;
};

struct RhExperimentResult {
  std::vector<csv::RhSummaryRow> summary;  // one per window
  std::vector<csv::RhRunRow> runs;         // rep-major
  std::size_t misses = 0;                  // RH runs with a deadline miss
};

/// Cost difference (RH - off-line) / off-line over replications and windows.
/// The off-line reference is the exact power-constrained (or unconstrained)
/// optimum. Replications may run on several threads; results are stored by
/// replication index, so the output does not depend on scheduling.
inline RhExperimentResult run_rh_experiment(const RhExperiment& ex) {
  const std::size_t nw = ex.windows.size();
  std::vector<csv::RhRunRow> runs(ex.reps * nw);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < ex.reps; r = next++) {
      const Instance inst = ex.make_instance(r);
      SolverConfig exact = ex.controller.solver;
      exact.mode = SolveMode::Exact;
      const Schedule off = ex.controller.power_constrained ? solve_p2(inst, exact) : solve_p1(inst, exact);
      for (std::size_t w = 0; w < nw; ++w) {
        RhConfig cfg = ex.controller;
        cfg.window = ex.windows[w];
        const RhTrace tr = simulate_rh(inst, cfg);
        csv::RhRunRow& row = runs[r * nw + w];
        row.rep = r;
        row.window = ex.windows[w];
        row.rh_cost = tr.total_cost;
        row.offline_cost = off.total_cost;
        row.diff = (tr.total_cost - off.total_cost) / off.total_cost;
        row.calc_time_s = tr.mean_compute_seconds();
        row.feasible = tr.feasible;
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(ex.threads, ex.reps));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RhExperimentResult out;
  out.runs = std::move(runs);
  for (std::size_t w = 0; w < nw; ++w) {
    csv::RhSummaryRow s;
    s.window = ex.windows[w];
    s.worst_diff = -std::numeric_limits<double>::infinity();
    s.best_diff = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < ex.reps; ++r) {
      const csv::RhRunRow& row = out.runs[r * nw + w];
      s.mean_diff += row.diff;
      s.mean_calc_time_s += row.calc_time_s;
      s.worst_diff = std::max(s.worst_diff, row.diff);
      s.best_diff = std::min(s.best_diff, row.diff);
      if (!row.feasible) ++out.misses;
    }
    s.mean_diff /= static_cast<double>(ex.reps);
    s.mean_calc_time_s /= static_cast<double>(ex.reps);
    out.summary.push_back(s);
  }
  return out;
}

}  // namespace dts::bench
