#pragma once

// Synthetic workloads. All randomness comes from std::mt19937_64 (whose
// output sequence is fixed by the standard) through the transforms below, so
// a seed reproduces the same instance on every platform:
//   uniform01    = (next() >> 11) * 2^-53           in [0, 1)
//   exponential  = -log1p(-uniform01) / rate
//   uniform[a,b] = a + (b - a) * uniform01
//   int{lo..hi}  = lo + floor(uniform01 * (hi - lo + 1))

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dts/energy.hpp"
#include "dts/errors.hpp"
#include "dts/task_model.hpp"

namespace dts {

class WorkloadRng {
 public:
  explicit WorkloadRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }
  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + std::min(hi - lo, static_cast<std::uint64_t>(uniform01() * span));
  }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
struct Range {
  T lo{};
  T hi{};
};

/// How generated tasks are sized and which energy functions they use.
struct WorkloadOptions {
  /// Energy function shared by all tasks, or the template for per-task ones.
  EnergyDescriptor energy = default_energy();
  /// When set, every task gets its own Shannon function whose channel gain is
  /// drawn log-uniformly from this range (other parameters from `energy`).
  std::optional<Range<double>> per_task_gain;
  /// When set, deadlines are a_i + U[lo, hi] instead of the fixed offset.
  std::optional<Range<double>> deadline_range;
  /// When set, bits are drawn uniformly from this range instead of fixed.
  std::optional<Range<std::uint64_t>> bits_range;
  /// Every task shares the deadline a_N + offset (last arrival plus the
  /// fixed offset).
  bool common_deadline = false;

  static EnergyDescriptor default_energy() {
    EnergyDescriptor d;
    d.model = EnergyDescriptor::Model::Shannon;
    d.n0 = 1.0;
    d.gain = 1.0;
    d.bandwidth = 50.0;
    return d;
  }
};

namespace detail {

inline void check_options(const WorkloadOptions& opt) {
  if (opt.deadline_range &&
      !(opt.deadline_range->lo > 0.0 && opt.deadline_range->hi >= opt.deadline_range->lo)) {
    throw ParameterError("deadline range must satisfy 0 < lo <= hi");
  }
  if (opt.bits_range && !(opt.bits_range->lo > 0 && opt.bits_range->hi >= opt.bits_range->lo)) {
    throw ParameterError("bits range must satisfy 0 < lo <= hi");
  }
  if (opt.per_task_gain) {
    if (!(opt.per_task_gain->lo > 0.0 && opt.per_task_gain->hi >= opt.per_task_gain->lo)) {
      throw ParameterError("gain range must satisfy 0 < lo <= hi");
    }
    if (opt.energy.model != EnergyDescriptor::Model::Shannon) {
      throw ParameterError("per-task gains require the shannon energy model");
    }
  }
  make_energy(opt.energy);  // validates parameters
}

// Attaches deadlines, bits and energy functions to a sorted arrival list.
inline Instance assemble(const std::vector<double>& arrivals, double deadline_offset,
                         std::uint64_t bits, const WorkloadOptions& opt, WorkloadRng& rng,
                         std::string note) {
  std::vector<Task> tasks;
  tasks.reserve(arrivals.size());
  Instance::EnergyTable table;
  double shared_tau_min = 0.0;
  if (!opt.per_task_gain) {
    const auto fn = make_energy(opt.energy);
    if (const auto* sh = dynamic_cast<const ShannonEnergy*>(fn.get())) {
      shared_tau_min = sh->tau_min().value_or(0.0);
    }
    table.emplace("f0", fn);
  }
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    Task t;
    t.id = i + 1;
    t.arrival = arrivals[i];
    const double offset =
        opt.deadline_range ? rng.uniform(opt.deadline_range->lo, opt.deadline_range->hi)
                           : deadline_offset;
    t.deadline = (opt.common_deadline ? arrivals.back() : t.arrival) + offset;
    t.bits = opt.bits_range ? rng.integer(opt.bits_range->lo, opt.bits_range->hi) : bits;
    if (opt.per_task_gain) {
      EnergyDescriptor d = opt.energy;
      const double log_lo = std::log(opt.per_task_gain->lo);
      const double log_hi = std::log(opt.per_task_gain->hi);
      d.gain = std::exp(rng.uniform(log_lo, log_hi));
      const auto fn = std::make_shared<const ShannonEnergy>(d.n0, d.gain, d.bandwidth, d.p_max);
      t.tau_min = fn->tau_min().value_or(0.0);
      t.energy = "f" + std::to_string(i + 1);
      table.emplace(t.energy, fn);
    } else {
      t.energy = "f0";
      t.tau_min = shared_tau_min;
    }
    tasks.push_back(std::move(t));
  }
  return Instance(std::move(tasks), std::move(table), std::move(note));
}

}  // namespace detail

/// Poisson arrivals: exponential gaps with mean 1/rate starting from time 0,
/// deadline a_i + deadline_offset (or the options' deadline range).
inline Instance generate_poisson(std::size_t n, double rate, double deadline_offset,
                                 std::uint64_t bits, std::uint64_t seed,
                                 const WorkloadOptions& opt = {}) {
  if (n < 1) throw ParameterError("generate_poisson: n must be >= 1");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("generate_poisson: rate must be > 0");
  if (!(deadline_offset > 0.0)) throw ParameterError("generate_poisson: deadline offset must be > 0");
  if (bits == 0 && !opt.bits_range) throw ParameterError("generate_poisson: bits must be > 0");
  detail::check_options(opt);
  WorkloadRng rng(seed);
  std::vector<double> arrivals(n);
  double t = 0.0;
  for (auto& a : arrivals) {
    t += rng.exponential(rate);
    a = t;
  }
  return detail::assemble(arrivals, deadline_offset, bits, opt, rng,
                          "poisson rate=" + std::to_string(rate) + " seed=" + std::to_string(seed));
}

/// Bursty arrivals. Burst starts are spaced by U[burst_interval]; each burst
/// holds U{burst_size} tasks separated by U[intra_gap]. Bursts that outlast
/// the next burst start interleave with it (arrivals are merged in time
/// order). The first n tasks are kept.
inline Instance generate_bursty(Range<double> burst_interval, Range<std::uint64_t> burst_size,
                                Range<double> intra_gap, double deadline_offset,
                                std::uint64_t bits, std::size_t n, std::uint64_t seed,
                                const WorkloadOptions& opt = {}) {
  if (n < 1) throw ParameterError("generate_bursty: n must be >= 1");
  if (!(burst_interval.lo > 0.0 && burst_interval.hi >= burst_interval.lo)) {
    throw ParameterError("generate_bursty: burst interval must satisfy 0 < lo <= hi");
  }
  if (!(burst_size.lo >= 1 && burst_size.hi >= burst_size.lo)) {
    throw ParameterError("generate_bursty: burst size must satisfy 1 <= lo <= hi");
  }
  if (!(intra_gap.lo >= 0.0 && intra_gap.hi >= intra_gap.lo)) {
    throw ParameterError("generate_bursty: intra-burst gap must satisfy 0 <= lo <= hi");
  }
  if (!(deadline_offset > 0.0)) throw ParameterError("generate_bursty: deadline offset must be > 0");
  if (bits == 0 && !opt.bits_range) throw ParameterError("generate_bursty: bits must be > 0");
  detail::check_options(opt);
  WorkloadRng rng(seed);
  std::vector<double> arrivals;
  arrivals.reserve(n + burst_size.hi);
  double burst_start = 0.0;
  while (arrivals.size() < n) {
    burst_start += rng.uniform(burst_interval.lo, burst_interval.hi);
    const auto size = rng.integer(burst_size.lo, burst_size.hi);
    double t = burst_start;
    for (std::uint64_t k = 0; k < size; ++k) {
      if (k > 0) t += rng.uniform(intra_gap.lo, intra_gap.hi);
      arrivals.push_back(t);
    }
  }
  std::stable_sort(arrivals.begin(), arrivals.end());
  arrivals.resize(n);
  return detail::assemble(arrivals, deadline_offset, bits, opt, rng,
                          "bursty seed=" + std::to_string(seed));
}

}  // namespace dts
