#pragma once

// Equal-derivative time filling: for tasks i..j and a window (t1, t2) find
// controls tau_m with
//     sum_m v_m tau_m = t2 - t1,   w_m'(tau_m) = sigma for every m.
// The common derivative sigma is the root of the increasing function
//     T(sigma) = sum_m v_m inv_deriv_m(sigma) - (t2 - t1).
// Tasks sharing one energy function reduce to tau = (t2 - t1) / sum v.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dts/energy.hpp"
#include "dts/errors.hpp"
#include "dts/task_model.hpp"

namespace dts {

enum class SolveMode { Exact, TableLookup };

struct NeOptions {
  /// Relative tolerance on the time residual |T(sigma)| / (t2 - t1).
  double rel_tol = 1e-12;
  int max_iter = 200;
  /// Windows longer than the capped domains allow: throw DomainSaturation
  /// (false), or run every task at its cap and leave the rest idle (true).
  /// The latter is exact when each capped derivative reaches 0 at the cap,
  /// as the Shannon family does.
  bool idle_beyond_cap = false;
};

struct NeSolution {
  std::vector<double> controls;  // tau_m for m = i..j
  Slope sigma;
  double t1 = 0.0;
  double t2 = 0.0;
};

/// Derivative tables, one per distinct energy function, for table-lookup
/// solves.
class DerivativeTables {
 public:
  void add(const EnergyPtr& fn, double tau_lo, double tau_hi, std::size_t n = 1000) {
    if (tables_.contains(fn.get())) return;
    tables_.emplace(fn.get(), TabulatedEnergy(fn, tau_lo, tau_hi, n));
  }

  const TabulatedEnergy& at(const EnergyFunction* fn) const {
    const auto it = tables_.find(fn);
    if (it == tables_.end()) throw ParameterError("no derivative table for energy function");
    return it->second;
  }

  bool empty() const { return tables_.empty(); }

 private:
  std::map<const EnergyFunction*, TabulatedEnergy> tables_;
};

/// NE systems over sub-ranges of one task sequence. Keeps prefix sums of the
/// bit counts so that homogeneous ranges solve in O(1).
class NeProblem {
 public:
  /// `ids` are the 1-based task ids used in error messages.
  NeProblem(std::vector<double> bits, std::vector<const EnergyFunction*> energy,
            std::vector<std::size_t> ids, NeOptions opt = {},
            const DerivativeTables* tables = nullptr)
      : bits_(std::move(bits)),
        energy_(std::move(energy)),
        ids_(std::move(ids)),
        opt_(opt),
        tables_(tables) {
    const std::size_t n = bits_.size();
    prefix_.assign(n + 1, 0.0);
    for (std::size_t m = 0; m < n; ++m) prefix_[m + 1] = prefix_[m] + bits_[m];
    floor_prefix_.assign(n + 1, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      floor_prefix_[m + 1] = floor_prefix_[m] + bits_[m] * energy_[m]->tau_floor();
    }
    run_end_.assign(n, 0);
    for (std::size_t m = n; m-- > 0;) {
      run_end_[m] = (m + 1 < n && energy_[m + 1] == energy_[m]) ? run_end_[m + 1] : m;
    }
  }

  /// Builds the problem for tasks [first, last] of an instance.
  static NeProblem for_instance(const Instance& inst, std::size_t first, std::size_t last,
                                NeOptions opt = {}, const DerivativeTables* tables = nullptr) {
    std::vector<double> bits;
    std::vector<const EnergyFunction*> energy;
    std::vector<std::size_t> ids;
    for (std::size_t m = first; m <= last; ++m) {
      bits.push_back(static_cast<double>(inst.task(m).bits));
      energy.push_back(&inst.energy_of(m));
      ids.push_back(inst.task(m).id);
    }
    return NeProblem(std::move(bits), std::move(energy), std::move(ids), opt, tables);
  }

  /// Builds the problem for tasks [first, last] of a task array.
  static NeProblem for_tasks(const TaskArrays& tasks, std::size_t first, std::size_t last,
                             NeOptions opt = {}, const DerivativeTables* tables = nullptr) {
    const auto b = static_cast<long>(first);
    const auto e = static_cast<long>(last + 1);
    return NeProblem({tasks.bits.begin() + b, tasks.bits.begin() + e},
                     {tasks.energy.begin() + b, tasks.energy.begin() + e},
                     {tasks.ids.begin() + b, tasks.ids.begin() + e}, opt, tables);
  }

  std::size_t size() const { return bits_.size(); }
  double bits(std::size_t m) const { return bits_[m]; }
  const EnergyFunction& energy(std::size_t m) const { return *energy_[m]; }
  double total_bits(std::size_t i, std::size_t j) const { return prefix_[j + 1] - prefix_[i]; }
  bool homogeneous(std::size_t i, std::size_t j) const { return run_end_[i] >= j; }
  bool table_mode() const { return tables_ != nullptr; }

  /// Shortest window the floored controls of tasks i..j can fill.
  double floor_time(std::size_t i, std::size_t j) const { return floor_prefix_[j + 1] - floor_prefix_[i]; }

  /// Common derivative of NE(i, j; t1, t2); the negative-infinity sentinel
  /// when t1 == t2 or the window is shorter than floor_time.
  Slope sigma(std::size_t i, std::size_t j, double t1, double t2) const {
    check_window(t1, t2);
    if (t1 == t2 || below_floor(i, j, t2 - t1)) return Slope::negative_infinity();
    const Root r = root(i, j, t2 - t1);
    return Slope(r.sigma, r.idle);
  }

  NeSolution solve(std::size_t i, std::size_t j, double t1, double t2) const {
    check_window(t1, t2);
    NeSolution out;
    out.t1 = t1;
    out.t2 = t2;
    if (t1 == t2) {
      out.sigma = Slope::negative_infinity();
      out.controls.assign(j - i + 1, 0.0);
      return out;
    }
    if (below_floor(i, j, t2 - t1)) {
      out.sigma = Slope::negative_infinity();
      for (std::size_t m = i; m <= j; ++m) out.controls.push_back(energy_[m]->tau_floor());
      fill_window(i, t2 - t1, out.controls);
      return out;
    }
    const Root r = root(i, j, t2 - t1);
    out.sigma = Slope(r.sigma, r.idle);
    out.controls.resize(j - i + 1);
    if (r.uniform_tau) {
      std::fill(out.controls.begin(), out.controls.end(), *r.uniform_tau);
      return out;
    }
    for (std::size_t m = i; m <= j; ++m) out.controls[m - i] = control_at(m, r.sigma);
    fill_window(i, t2 - t1, out.controls);
    return out;
  }

 private:
  // |sigma| beyond e^700 is outside double range for the energy families.
  static constexpr double kMaxLogSlope = 700.0;

  static double slope_at(double z) {
    return -std::exp(std::clamp(z, -kMaxLogSlope, kMaxLogSlope));
  }

  struct Root {
    double sigma;
    std::optional<double> uniform_tau;
    double idle = 0.0;  // per-bit idle time beyond the caps
  };

  // Close the residual left by the root finder so the window is filled
  // exactly: scale the uncapped controls, pinning any that reach the cap.
  // The relative change is at most the solver tolerance, or one grid cell
  // in table mode.
  void fill_window(std::size_t i, double span, std::vector<double>& controls) const {
    std::vector<bool> pinned(controls.size(), false);
    for (std::size_t pass = 0; pass <= controls.size(); ++pass) {
      double fixed = 0.0, free = 0.0;
      for (std::size_t k = 0; k < controls.size(); ++k) {
        (pinned[k] ? fixed : free) += bits_[i + k] * controls[k];
      }
      if (free <= 0.0) return;
      const double scale = (span - fixed) / free;
      bool changed = false;
      for (std::size_t k = 0; k < controls.size(); ++k) {
        if (pinned[k]) continue;
        const double cap = energy_[i + k]->tau_cap();
        controls[k] *= scale;
        if (controls[k] >= cap) {
          controls[k] = cap;
          pinned[k] = true;
          changed = true;
        }
      }
      if (!changed) return;
    }
  }

  bool below_floor(std::size_t i, std::size_t j, double span) const {
    return span < floor_time(i, j) * (1.0 - 1e-12);
  }

  static void check_window(double t1, double t2) {
    if (!(t1 <= t2)) throw ParameterError("NE window must satisfy t1 <= t2");
  }

  double control_at(std::size_t m, double sigma) const {
    if (tables_) return tables_->at(energy_[m]).lookup_inv_deriv(sigma).tau;
    if (sigma >= energy_[m]->max_deriv()) return energy_[m]->tau_cap();
    return energy_[m]->inv_deriv(sigma);
  }

  [[noreturn]] void saturate(std::size_t i, double span, double capacity) const {
    throw DomainSaturation("NE window of " + std::to_string(span) +
                               " s exceeds the capped energy domains (" +
                               std::to_string(capacity) + " s) starting at task " +
                               std::to_string(ids_[i]),
                           ids_[i]);
  }

  Root root(std::size_t i, std::size_t j, double span) const {
    if (homogeneous(i, j)) {
      const double tau = span / total_bits(i, j);
      const EnergyFunction& f = *energy_[i];
      if (tau > f.tau_cap() * (1.0 + 1e-12)) {
        if (!opt_.idle_beyond_cap) saturate(i, span, total_bits(i, j) * f.tau_cap());
        return {f.max_deriv(), f.tau_cap(), tau - f.tau_cap()};
      }
      return {f.deriv(std::min(tau, f.tau_cap())), tau};
    }
    double capacity = 0.0;
    for (std::size_t m = i; m <= j; ++m) capacity += bits_[m] * energy_[m]->tau_cap();
    if (span > capacity * (1.0 + 1e-12) && !opt_.idle_beyond_cap) saturate(i, span, capacity);
    if (span >= capacity) {
      double sig = energy_[i]->max_deriv();
      for (std::size_t m = i; m <= j; ++m) sig = std::min(sig, energy_[m]->max_deriv());
      return {sig, std::nullopt, (span - capacity) / total_bits(i, j)};
    }
    return tables_ ? root_table(i, j, span) : root_newton(i, j, span);
  }

  // Initial log(-sigma) guess: bit-weighted mean over tasks of log(-w'(tau))
  // at the homogeneous share tau = span / sum v.
  double initial_z(std::size_t i, std::size_t j, double span) const {
    const double share = span / total_bits(i, j);
    double acc = 0.0;
    for (std::size_t m = i; m <= j; ++m) {
      const double tau = std::min(share, 0.5 * energy_[m]->tau_cap());
      acc += bits_[m] * std::log(-energy_[m]->deriv(tau));
    }
    return acc / total_bits(i, j);
  }

  // Safeguarded Newton on z = log(-sigma): time(z) is decreasing in z.
  Root root_newton(std::size_t i, std::size_t j, double span) const {
    auto eval = [&](double z, double& slope) {
      const double sigma = slope_at(z);
      double time = 0.0;
      slope = 0.0;
      for (std::size_t m = i; m <= j; ++m) {
        const EnergyFunction& f = *energy_[m];
        const double tau = f.inv_deriv(sigma);
        time += bits_[m] * tau;
        if (tau > f.tau_floor()) slope += bits_[m] * sigma / f.deriv2(tau);  // d time / dz
      }
      return time;
    };
    const double tol = opt_.rel_tol * span;
    double z = initial_z(i, j, span);
    double slope = 0.0;
    double time = eval(z, slope);
    double lo = -std::numeric_limits<double>::infinity();  // time(lo) > span
    double hi = std::numeric_limits<double>::infinity();   // time(hi) < span
    for (int it = 0; it < opt_.max_iter; ++it) {
      const double resid = time - span;
      if (std::abs(resid) <= tol) return {slope_at(z), std::nullopt};
      (resid > 0.0 ? lo : hi) = z;
      // Newton on log(time) - log(span), which is close to linear in z.
      double next = z - (std::log(time) - std::log(span)) * time / slope;
      next = std::clamp(next, -kMaxLogSlope, kMaxLogSlope);
      if (!std::isfinite(next) || next <= lo || next >= hi) {
        if (std::isfinite(lo) && std::isfinite(hi)) {
          next = 0.5 * (lo + hi);
        } else {
          next = std::isfinite(lo) ? lo + 4.0 : hi - 4.0;
        }
        next = std::clamp(next, -kMaxLogSlope, kMaxLogSlope);
      }
      if (std::isfinite(lo) && std::isfinite(hi) &&
          hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) {
        return {slope_at(z), std::nullopt};
      }
      z = next;
      time = eval(z, slope);
    }
    return {slope_at(z), std::nullopt};
  }

  // Bisection on z with table lookups; time(z) is a nonincreasing step
  // function, so the search stops once the bracket is below grid resolution.
  Root root_table(std::size_t i, std::size_t j, double span) const {
    auto time_at = [&](double z) {
      const double sigma = slope_at(z);
      double time = 0.0;
      for (std::size_t m = i; m <= j; ++m) {
        time += bits_[m] * tables_->at(energy_[m]).lookup_inv_deriv(sigma).tau;
      }
      return time;
    };
    double lo = initial_z(i, j, span);
    double hi = lo;
    double step = 1.0;
    while (time_at(lo) < span && step < 1e3) {
      lo -= step;
      step *= 2.0;
    }
    step = 1.0;
    while (time_at(hi) > span && step < 1e3) {
      hi += step;
      step *= 2.0;
    }
    for (int it = 0; it < opt_.max_iter && hi - lo > 1e-12 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double t = time_at(mid);
      if (t == span) return {slope_at(mid), std::nullopt};
      (t > span ? lo : hi) = mid;
    }
    return {slope_at(0.5 * (lo + hi)), std::nullopt};
  }

  std::vector<double> bits_;
  std::vector<const EnergyFunction*> energy_;
  std::vector<std::size_t> ids_;
  std::vector<double> prefix_;
  std::vector<double> floor_prefix_;
  std::vector<std::size_t> run_end_;
  NeOptions opt_;
  const DerivativeTables* tables_;
};

/// NE(first..last; t1, t2) over tasks of an instance (0-based, inclusive).
inline NeSolution solve_ne(const Instance& inst, std::size_t first, std::size_t last, double t1,
                           double t2, NeOptions opt = {}) {
  if (first > last || last >= inst.size()) throw ParameterError("solve_ne: bad task range");
  return NeProblem::for_instance(inst, first, last, opt).solve(0, last - first, t1, t2);
}

inline Slope sigma(const Instance& inst, std::size_t first, std::size_t last, double t1, double t2,
                   NeOptions opt = {}) {
  if (first > last || last >= inst.size()) throw ParameterError("sigma: bad task range");
  return NeProblem::for_instance(inst, first, last, opt).sigma(0, last - first, t1, t2);
}

}  // namespace dts
