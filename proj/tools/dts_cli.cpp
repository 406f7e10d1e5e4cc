// dts: generate workloads, solve off-line schedules, run the receding-horizon
// controller and benchmark the solvers.
//
// Exit status: 0 success, 2 infeasible instance, 1 any error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dts/bench.hpp"
#include "dts/csv.hpp"
#include "dts/errors.hpp"
#include "dts/gctda.hpp"
#include "dts/generate.hpp"
#include "dts/instance_io.hpp"
#include "dts/rh_control.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;

template <typename T>
dts::Range<T> parse_range(const std::string& text, const char* what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    const T v = static_cast<T>(dts::csv::to_double(text));
    return {v, v};
  }
  const T lo = static_cast<T>(dts::csv::to_double(text.substr(0, colon)));
  const T hi = static_cast<T>(dts::csv::to_double(text.substr(colon + 1)));
  if (hi < lo) throw dts::ParameterError(std::string(what) + ": range needs lo <= hi");
  return {lo, hi};
}

// Workload generator flags shared by gen and rh.
struct GenFlags {
  bool bursty = false;
  std::size_t n = 500;
  double lambda = 0.2;
  double deadline = 10.0;
  std::uint64_t bits = 4096;
  std::string deadline_range, bits_range, gain_range;
  bool common_deadline = false;
  std::string burst_interval = "8:12", burst_size = "10:20", intra_gap = "0:1";
  double n0 = 1.0, gain = 1.0;
  std::optional<double> bandwidth;
  std::optional<double> p_max;
  double cap_time = 0.5;
  double rate_ratio = 20.0;
  int table = 0;

  void add(CLI::App* app) {
    app->add_flag("--poisson", "Poisson arrivals (default)");
    app->add_flag("--bursty", bursty, "Bursty arrivals");
    app->add_option("--n", n, "Number of tasks")->check(CLI::PositiveNumber);
    app->add_option("--lambda", lambda, "Poisson arrival rate (1/s)");
    app->add_option("--deadline", deadline, "Deadline offset d (s)");
    app->add_option("--bits", bits, "Bits per task");
    app->add_option("--deadline-range", deadline_range, "Deadline offset drawn from lo:hi");
    app->add_option("--bits-range", bits_range, "Bits drawn from lo:hi");
    app->add_flag("--common-deadline", common_deadline, "All tasks share a_N + deadline");
    app->add_option("--burst-interval", burst_interval, "Burst spacing lo:hi (s)");
    app->add_option("--burst-size", burst_size, "Tasks per burst lo:hi");
    app->add_option("--intra-gap", intra_gap, "Gap inside a burst lo:hi (s)");
    app->add_option("--n0", n0, "Noise power N0");
    app->add_option("--gain", gain, "Channel gain s");
    app->add_option("--gain-range", gain_range, "Per-task gain, log-uniform over lo:hi");
    app->add_option("--bandwidth", bandwidth, "Bandwidth B (Hz)");
    app->add_option("--p-max", p_max, "Maximum transmit power");
    app->add_option("--cap-time", cap_time,
                    "Without --bandwidth: B such that a task of --bits takes this long (s) at the "
                    "energy-optimal rate")
        ->check(CLI::PositiveNumber);
    app->add_option("--rate-ratio", rate_ratio,
                    "Without --p-max: P_max such that tau_min is the energy-optimal tau over this "
                    "factor (0 disables the power limit)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--table", table, "Use comparison setting 1-4")->check(CLI::Range(1, 4));
  }

  dts::Instance make(std::uint64_t seed) const {
    if (table != 0) return dts::bench::table_preset(table).generate(seed);
    dts::WorkloadOptions opt;
    opt.energy.n0 = n0;
    opt.energy.gain = gain;
    opt.energy.bandwidth =
        bandwidth.value_or(std::numbers::ln2 * static_cast<double>(bits) / cap_time);
    opt.energy.p_max = p_max;
    if (!p_max && rate_ratio > 0.0) {
      // tau_min ~ 1 / (B log2(P s / N0)) = tau_cap / ratio
      opt.energy.p_max = n0 / gain * std::exp2(rate_ratio / std::numbers::ln2);
    }
    if (!deadline_range.empty()) opt.deadline_range = parse_range<double>(deadline_range, "--deadline-range");
    if (!bits_range.empty()) opt.bits_range = parse_range<std::uint64_t>(bits_range, "--bits-range");
    if (!gain_range.empty()) opt.per_task_gain = parse_range<double>(gain_range, "--gain-range");
    opt.common_deadline = common_deadline;
    if (bursty) {
      return dts::generate_bursty(parse_range<double>(burst_interval, "--burst-interval"),
                                  parse_range<std::uint64_t>(burst_size, "--burst-size"),
                                  parse_range<double>(intra_gap, "--intra-gap"), deadline, bits, n,
                                  seed, opt);
    }
    return dts::generate_poisson(n, lambda, deadline, bits, seed, opt);
  }
};

// Solver flags shared by solve, rh and bench.
struct SolverFlags {
  double tolerance = 1e-12;
  bool table_lookup = false;
  bool strict_domain = false;

  void add(CLI::App* app) {
    app->add_option("--tolerance", tolerance, "Relative tolerance of the equal-derivative solver")
        ->check(CLI::PositiveNumber);
    app->add_flag("--table-lookup", table_lookup, "Use 1000-point derivative tables");
    app->add_flag("--strict-domain", strict_domain,
                  "Fail when a window exceeds the capped energy domain instead of idling");
  }

  dts::SolverConfig config() const {
    dts::SolverConfig cfg;
    cfg.ne.rel_tol = tolerance;
    cfg.ne.idle_beyond_cap = !strict_domain;
    cfg.mode = table_lookup ? dts::SolveMode::TableLookup : dts::SolveMode::Exact;
    return cfg;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw dts::ParameterError("cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-minimal transmission scheduling for deadline-constrained packets"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string output;

  // gen
  GenFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "Generate an instance file");
  gen_flags.add(gen);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("-o,--output", output, "Instance file to write")->required();

  // solve
  std::string instance_path;
  SolverFlags solve_flags;
  bool power_constrained = false;
  auto* solve = app.add_subcommand("solve", "Solve the off-line problem for an instance");
  solve->add_option("instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
  solve_flags.add(solve);
  solve->add_flag("--power-constrained", power_constrained, "Respect per-task tau_min");
  solve->add_option("-o,--output", output, "Schedule CSV to write");

  // rh
  GenFlags rh_gen;
  SolverFlags rh_solver;
  std::string window = "1:11:1";
  std::size_t reps = 1000;
  std::size_t threads = 1;
  std::string runs_output;
  bool rh_power = false;
  auto* rh = app.add_subcommand("rh", "Receding-horizon control against the off-line optimum");
  rh->add_option("instance", instance_path, "Instance file (otherwise one is generated per rep)")
      ->check(CLI::ExistingFile);
  rh_gen.add(rh);
  rh_solver.add(rh);
  rh->add_option("--seed", seed, "Seed of replication 0; rep r uses seed + r");
  rh->add_option("--window", window, "Window grid lo:hi:step (s)");
  rh->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber);
  rh->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  rh->add_flag("--power-constrained", rh_power, "Respect per-task tau_min");
  rh->add_option("-o,--output", output, "Summary CSV to write");
  rh->add_option("--runs-output", runs_output, "Per-replication CSV to write");

  // bench
  SolverFlags bench_solver;
  std::size_t mr_passes = 10000;
  int runs = 3;
  int bench_table = 0;
  auto* bench = app.add_subcommand("bench", "Time GCTDA, GCTDA_TL and MoveRight on one instance");
  bench->add_option("instance", instance_path, "Instance file")->check(CLI::ExistingFile);
  bench->add_option("--table", bench_table, "Generate comparison setting 1-4 instead of a file")
      ->check(CLI::Range(1, 4));
  bench->add_option("--seed", seed, "Seed for --table");
  bench_solver.add(bench);
  bench->add_option("--moveright-passes", mr_passes, "MoveRight pass budget");
  bench->add_option("--runs", runs, "Timing runs (median is reported)")->check(CLI::PositiveNumber);
  bench->add_option("-o,--output", output, "Bench CSV to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (gen->parsed()) {
      const dts::Instance inst = gen_flags.make(seed);
      dts::save_instance(inst, output);
      std::cout << "wrote " << inst.size() << " tasks to " << output << '\n';
      return kOk;
    }

    if (solve->parsed()) {
      const dts::Instance inst = dts::load_instance(instance_path);
      const dts::SolverConfig cfg = solve_flags.config();
      const dts::Schedule s = power_constrained ? dts::solve_p2(inst, cfg) : dts::solve_p1(inst, cfg);
      std::cout << "status " << dts::to_string(s.status) << '\n';
      if (s.status == dts::ScheduleStatus::Infeasible) {
        std::cout << "violating task " << s.violating_task.value_or(0) << '\n';
        return kInfeasible;
      }
      std::cout.precision(12);
      std::cout << "cost " << s.total_cost << '\n';
      if (!output.empty()) {
        auto out = open_output(output);
        dts::csv::write_schedule(out, inst, s);
      }
      return kOk;
    }

    if (rh->parsed()) {
      dts::bench::RhExperiment ex;
      ex.windows = dts::bench::parse_grid(window);
      ex.reps = reps;
      ex.threads = threads;
      ex.controller.power_constrained = rh_power;
      ex.controller.solver = rh_solver.config();
      std::optional<dts::Instance> fixed;
      if (!instance_path.empty()) fixed = dts::load_instance(instance_path);
      if (fixed && rh_power && !dts::check_feasibility_p2(*fixed).feasible) {
        std::cout << "status infeasible\n";
        return kInfeasible;
      }
      ex.make_instance = [&](std::size_t r) { return fixed ? *fixed : rh_gen.make(seed + r); };
      const auto res = dts::bench::run_rh_experiment(ex);
      dts::csv::write_rh_summary(std::cout, res.summary);
      if (!output.empty()) {
        auto out = open_output(output);
        dts::csv::write_rh_summary(out, res.summary);
      }
      if (!runs_output.empty()) {
        auto out = open_output(runs_output);
        dts::csv::write_rh_runs(out, res.runs);
      }
      if (res.misses > 0) std::cout << "deadline misses in " << res.misses << " runs\n";
      return kOk;
    }

    if (bench->parsed()) {
      if (instance_path.empty() == (bench_table == 0)) {
        throw dts::ParameterError("bench needs exactly one of an instance file or --table");
      }
      dts::Instance inst = bench_table ? dts::bench::table_preset(bench_table).generate(seed)
                                       : dts::load_instance(instance_path);
      if (bench_table && bench->count("--moveright-passes") == 0) {
        mr_passes = dts::bench::table_preset(bench_table).moveright_passes;
      }
      dts::bench::BenchOptions opt;
      opt.moveright_passes = mr_passes;
      opt.runs = runs;
      opt.solver = bench_solver.config();
      const auto rows = dts::bench::to_rows(dts::bench::run_bench(inst, opt));
      const std::string hash = dts::bench::instance_hash(inst);
      dts::csv::write_bench(std::cout, rows, hash);
      if (!output.empty()) {
        auto out = open_output(output);
        dts::csv::write_bench(out, rows, hash);
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
