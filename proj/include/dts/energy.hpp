#pragma once

// Per-bit energy cost families w(tau): tau is the transmission time per bit,
// w(tau) the energy spent per bit at that rate.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <memory>
#include <utility>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/lambert_w.hpp>

#include "dts/errors.hpp"

namespace dts {

/// A value of the energy derivative dw/dtau, or the negative-infinity
/// sentinel used for an empty time window. Ordered totally; the sentinel sorts
/// below every finite value.
class Slope {
 public:
  constexpr Slope() = default;
  constexpr explicit Slope(double v, double idle = 0.0) : value_(v), idle_(idle) {}

  static constexpr Slope negative_infinity() {
    return Slope(-std::numeric_limits<double>::infinity());
  }

  constexpr bool is_negative_infinity() const {
    return value_ == -std::numeric_limits<double>::infinity();
  }
  constexpr double value() const { return value_; }
  /// Idle time per bit when the window exceeds the capped domains (the
  /// value is then the derivative at the caps). Orders saturated windows
  /// among themselves; 0 otherwise.
  constexpr double idle() const { return idle_; }

  friend constexpr bool operator==(Slope a, Slope b) {
    return a.value_ == b.value_ && a.idle_ == b.idle_;
  }
  friend constexpr std::partial_ordering operator<=>(Slope a, Slope b) {
    if (const auto c = a.value_ <=> b.value_; c != 0) return c;
    return a.idle_ <=> b.idle_;
  }

 private:
  double value_ = -std::numeric_limits<double>::infinity();
  double idle_ = 0.0;
};

/// Serializable parameters of an energy function.
struct EnergyDescriptor {
  enum class Model { Shannon, InversePower };
  Model model = Model::InversePower;
  // Shannon
  double n0 = 0.0;
  double gain = 0.0;
  double bandwidth = 0.0;
  std::optional<double> p_max;
  // InversePower
  double k = 0.0;
  double p = 0.0;

  friend bool operator==(const EnergyDescriptor&, const EnergyDescriptor&) = default;
};

/// Strictly convex, decreasing per-bit energy cost on the domain (0, tau_cap].
/// deriv tends to -inf as tau -> 0+.
class EnergyFunction {
 public:
  virtual ~EnergyFunction() = default;

  virtual double eval(double tau) const = 0;
  virtual double deriv(double tau) const = 0;
  /// Second derivative; always positive on the domain.
  virtual double deriv2(double tau) const = 0;
  /// The tau with deriv(tau) == sigma. Throws DomainError when sigma lies
  /// outside the derivative's range over the domain.
  virtual double inv_deriv(double sigma) const = 0;
  /// Right end of the domain; +inf for unbounded families.
  virtual double tau_cap() const = 0;
  /// Supremum of deriv over the domain (attained at a finite cap).
  virtual double max_deriv() const = 0;
  virtual EnergyDescriptor describe() const = 0;
  /// Left end of the domain; 0 except for floored functions.
  virtual double tau_floor() const { return 0.0; }

  bool in_domain(double tau) const { return tau > 0.0 && tau <= tau_cap(); }
};

using EnergyPtr = std::shared_ptr<const EnergyFunction>;

/// w(tau) = (N0/s) * tau * 2^(1/(B tau)), the transmit energy per bit when
/// the power needed for rate 1/tau follows the high-SNR Shannon capacity.
///
/// The domain is capped at tau_cap = ln2/B, where w attains its minimum:
/// transmitting slower than that costs more energy and is never optimal.
/// deriv is the exact calculus derivative
///   (N0/s) * 2^(1/(B tau)) * (1 - ln2/(B tau)).
/// The form P(tau)(1 - 1/(B tau)) that drops the ln2 factor is not used here;
/// see approximate_deriv.
class ShannonEnergy final : public EnergyFunction {
 public:
  ShannonEnergy(double n0, double gain, double bandwidth,
                std::optional<double> p_max = std::nullopt)
      : n0_(n0), gain_(gain), bandwidth_(bandwidth), p_max_(p_max) {
    if (!(n0 > 0.0) || !(gain > 0.0) || !(bandwidth > 0.0) || !std::isfinite(n0) ||
        !std::isfinite(gain) || !std::isfinite(bandwidth)) {
      throw ParameterError("shannon energy: n0, gain and bandwidth must be positive");
    }
    if (p_max && !(*p_max > n0 / gain)) {
      throw ParameterError("shannon energy: p_max must exceed n0/gain");
    }
    scale_ = n0 / gain;
  }

  double eval(double tau) const override {
    return scale_ * tau * std::exp2(1.0 / (bandwidth_ * tau));
  }

  double deriv(double tau) const override {
    const double q = std::numbers::ln2 / (bandwidth_ * tau);
    return scale_ * std::exp(q) * (1.0 - q);
  }

  double deriv2(double tau) const override {
    const double q = std::numbers::ln2 / (bandwidth_ * tau);
    return scale_ * q * q * std::exp(q) / tau;
  }

  // With q = ln2/(B tau): sigma = c e^q (1 - q), so (q-1) e^(q-1) = -sigma/(c e)
  // and q = 1 + W0(-sigma/(c e)).
  double inv_deriv(double sigma) const override {
    if (!(sigma <= 0.0)) {
      throw DomainError("shannon energy: derivative value must be <= 0 on the capped domain");
    }
    if (sigma == 0.0) return tau_cap();
    const double arg = -sigma / (scale_ * std::numbers::e);
    const double q = 1.0 + boost::math::lambert_w0(arg);
    return std::numbers::ln2 / (bandwidth_ * q);
  }

  double tau_cap() const override { return std::numbers::ln2 / bandwidth_; }
  double max_deriv() const override { return 0.0; }

  /// Derivative form that omits the ln2 factor, P(tau)(1 - 1/(B tau)).
  /// Not the derivative of eval; exposed for comparison only.
  double approximate_deriv(double tau) const {
    return scale_ * std::exp2(1.0 / (bandwidth_ * tau)) * (1.0 - 1.0 / (bandwidth_ * tau));
  }

  /// Minimum time per bit allowed by p_max: 1 / (B log2(p_max s / N0)).
  std::optional<double> tau_min() const {
    if (!p_max_) return std::nullopt;
    return 1.0 / (bandwidth_ * std::log2(*p_max_ * gain_ / n0_));
  }

  EnergyDescriptor describe() const override {
    EnergyDescriptor d;
    d.model = EnergyDescriptor::Model::Shannon;
    d.n0 = n0_;
    d.gain = gain_;
    d.bandwidth = bandwidth_;
    d.p_max = p_max_;
    return d;
  }

 private:
  double n0_, gain_, bandwidth_;
  std::optional<double> p_max_;
  double scale_;
};

/// w(tau) = k / tau^p with p >= 1. Unbounded domain, closed-form inverse
/// derivative.
class InversePowerEnergy final : public EnergyFunction {
 public:
  InversePowerEnergy(double k, double p) : k_(k), p_(p) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ParameterError("inverse_power energy: k must be positive");
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("inverse_power energy: p must be >= 1");
  }

  double eval(double tau) const override { return k_ / std::pow(tau, p_); }
  double deriv(double tau) const override { return -p_ * k_ / std::pow(tau, p_ + 1.0); }
  double deriv2(double tau) const override {
    return p_ * (p_ + 1.0) * k_ / std::pow(tau, p_ + 2.0);
  }
  double inv_deriv(double sigma) const override {
    if (!(sigma < 0.0)) throw DomainError("inverse_power energy: derivative value must be < 0");
    return std::pow(p_ * k_ / -sigma, 1.0 / (p_ + 1.0));
  }
  double tau_cap() const override { return std::numeric_limits<double>::infinity(); }
  double max_deriv() const override { return 0.0; }

  EnergyDescriptor describe() const override {
    EnergyDescriptor d;
    d.model = EnergyDescriptor::Model::InversePower;
    d.k = k_;
    d.p = p_;
    return d;
  }

 private:
  double k_, p_;
};

inline EnergyPtr shannon_energy(double n0, double gain, double bandwidth,
                                std::optional<double> p_max = std::nullopt) {
  return std::make_shared<const ShannonEnergy>(n0, gain, bandwidth, p_max);
}

inline EnergyPtr inverse_power_energy(double k, double p) {
  return std::make_shared<const InversePowerEnergy>(k, p);
}

/// A function restricted to [floor, tau_cap]: inv_deriv projects onto the
/// floor, so an equal-derivative window never runs a task faster than
/// 1/floor bits per second. eval and the derivatives are the inner ones.
class FlooredEnergy final : public EnergyFunction {
 public:
  FlooredEnergy(EnergyPtr inner, double floor) : inner_(std::move(inner)), floor_(floor) {
    if (!inner_) throw ParameterError("floored energy: missing inner function");
    if (!(floor > 0.0 && floor < inner_->tau_cap())) {
      throw ParameterError("floored energy: floor must lie in (0, tau_cap)");
    }
    floor_deriv_ = inner_->deriv(floor_);
  }

  double eval(double tau) const override { return inner_->eval(tau); }
  double deriv(double tau) const override { return inner_->deriv(tau); }
  double deriv2(double tau) const override { return inner_->deriv2(tau); }
  double inv_deriv(double sigma) const override {
    return sigma <= floor_deriv_ ? floor_ : inner_->inv_deriv(sigma);
  }
  double tau_cap() const override { return inner_->tau_cap(); }
  double max_deriv() const override { return inner_->max_deriv(); }
  EnergyDescriptor describe() const override { return inner_->describe(); }
  double tau_floor() const override { return floor_; }

 private:
  EnergyPtr inner_;
  double floor_;
  double floor_deriv_;
};

inline EnergyPtr floored_energy(EnergyPtr inner, double floor) {
  return std::make_shared<const FlooredEnergy>(std::move(inner), floor);
}

inline EnergyPtr make_energy(const EnergyDescriptor& d) {
  switch (d.model) {
    case EnergyDescriptor::Model::Shannon:
      return shannon_energy(d.n0, d.gain, d.bandwidth, d.p_max);
    case EnergyDescriptor::Model::InversePower:
      return inverse_power_energy(d.k, d.p);
  }
  throw ParameterError("unknown energy model");
}

/// Generic inverse derivative by bisection on tau over (0, tau_cap], for
/// families without a closed form. Absolute tolerance is `rel_tol` times the
/// bracket width; at most `max_iter` halvings.
inline double inv_deriv_bisect(const EnergyFunction& f, double sigma, double tau_lo,
                               double rel_tol = 1e-12, int max_iter = 200) {
  double hi = f.tau_cap();
  if (!std::isfinite(hi)) {
    hi = std::max(1.0, tau_lo);
    while (f.deriv(hi) < sigma) {
      hi *= 2.0;
      if (!std::isfinite(hi)) throw DomainError("inv_deriv: derivative value out of range");
    }
  }
  double lo = tau_lo;
  if (sigma > f.deriv(hi) || sigma < f.deriv(lo)) {
    throw DomainError("inv_deriv: derivative value out of range");
  }
  const double tol = rel_tol * (hi - lo);
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f.deriv(mid) < sigma) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Derivative table of an energy function over a log-uniform tau grid.
/// Queries return the grid point whose derivative is nearest the request.
class TabulatedEnergy {
 public:
  struct Lookup {
    double tau;
    bool saturated;
  };

  TabulatedEnergy(EnergyPtr base, double tau_lo, double tau_hi, std::size_t n = 1000)
      : base_(std::move(base)) {
    if (n < 2) throw ParameterError("tabulate: need at least 2 grid points");
    tau_hi = std::min(tau_hi, base_->tau_cap());
    if (!(tau_lo > 0.0) || !(tau_hi > tau_lo)) {
      throw ParameterError("tabulate: need 0 < tau_lo < tau_hi <= tau_cap");
    }
    tau_.resize(n);
    slope_.resize(n);
    const double log_lo = std::log(tau_lo);
    const double step = (std::log(tau_hi) - log_lo) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
      tau_[k] = k + 1 == n ? tau_hi : std::exp(log_lo + step * static_cast<double>(k));
      slope_[k] = base_->deriv(tau_[k]);
    }
    tau_.front() = tau_lo;
  }

  Lookup lookup_inv_deriv(double sigma) const {
    if (sigma < slope_.front()) return {tau_.front(), true};
    if (sigma > slope_.back()) return {tau_.back(), true};
    const auto it = std::lower_bound(slope_.begin(), slope_.end(), sigma);
    std::size_t k = static_cast<std::size_t>(it - slope_.begin());
    if (k > 0 && (k == slope_.size() || sigma - slope_[k - 1] <= slope_[k] - sigma)) --k;
    return {tau_[k], false};
  }

  const EnergyFunction& base() const { return *base_; }
  const std::vector<double>& taus() const { return tau_; }
  const std::vector<double>& slopes() const { return slope_; }
  std::size_t size() const { return tau_.size(); }

 private:
  EnergyPtr base_;
  std::vector<double> tau_;
  std::vector<double> slope_;
};

inline TabulatedEnergy tabulate(EnergyPtr f, double tau_lo, double tau_hi, std::size_t n = 1000) {
  return TabulatedEnergy(std::move(f), tau_lo, tau_hi, n);
}

}  // namespace dts
