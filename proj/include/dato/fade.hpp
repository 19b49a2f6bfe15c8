#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dato/common.hpp"

namespace dato {

/// First-order lag c' = (u(t) - c)/tau whose input u switches to zero at a
/// cutoff time, modelling a cost coefficient that is attenuated to zero when
/// its information source disappears.
///
/// The lag is integrated with the exact integrating-factor formula plus
/// Gauss-Legendre quadrature for the source term, over a fixed internal grid
/// that is cached and extended on demand. That makes c(t) a deterministic,
/// machine-precision function of t: point queries are consistent with the
/// analytic rate (u_eff(t) - c(t))/tau everywhere except the cutoff instant
/// itself, where the rate is genuinely discontinuous.
class FadeCoefficient {
 public:
  FadeCoefficient(std::function<double(double)> input, double initial,
                  double time_constant,
                  double cutoff = std::numeric_limits<double>::infinity())
      : input_(std::move(input)),
        c0_(initial),
        tau_(time_constant),
        cutoff_(cutoff) {
    if (!(tau_ > 0.0))
      throw config_error("fade filter: time constant must be positive");
    cache_.push_back(c0_);
  }

  double cutoff_time() const { return cutoff_; }

  /// Effective filter input: u(t) before the cutoff, 0 from the cutoff on.
  double target(double t) const { return t < cutoff_ ? input_(t) : 0.0; }

  double value(double t) const {
    if (t <= 0.0) return c0_;
    const auto k = static_cast<std::size_t>(t / kGrid);
    extend(k);
    return advance(cache_[k], static_cast<double>(k) * kGrid, t);
  }

  /// dc/dt at t (right-sided at the cutoff discontinuity).
  double rate(double t) const { return (target(t) - value(t)) / tau_; }

 private:
  static constexpr double kGrid = 1.0 / 64.0;

  void extend(std::size_t k) const {
    while (cache_.size() <= k) {
      const auto j = cache_.size();
      const double a = static_cast<double>(j - 1) * kGrid;
      cache_.push_back(advance(cache_[j - 1], a, a + kGrid));
    }
  }

  // Integrates c across [a, b], splitting at the cutoff so the quadrature
  // only ever sees a smooth input.
  double advance(double c, double a, double b) const {
    if (b <= a) return c;
    if (a < cutoff_ && b > cutoff_) {
      c = smooth_step(c, a, cutoff_);
      return c * std::exp(-(b - cutoff_) / tau_);
    }
    if (a >= cutoff_) return c * std::exp(-(b - a) / tau_);
    return smooth_step(c, a, b);
  }

  // c(b) = e^{-(b-a)/tau} c(a) + (1/tau) int_a^b e^{-(b-s)/tau} u(s) ds,
  // with the integral evaluated by 4-point Gauss-Legendre.
  double smooth_step(double c, double a, double b) const {
    static constexpr double nodes[4] = {-0.8611363115940526,
                                        -0.3399810435848563,
                                        0.3399810435848563,
                                        0.8611363115940526};
    static constexpr double weights[4] = {0.3478548451374538,
                                          0.6521451548625461,
                                          0.6521451548625461,
                                          0.3478548451374538};
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double integral = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double s = mid + half * nodes[q];
      integral += weights[q] * std::exp(-(b - s) / tau_) * input_(s);
    }
    integral *= half / tau_;
    return c * std::exp(-(b - a) / tau_) + integral;
  }

  std::function<double(double)> input_;
  double c0_;
  double tau_;
  double cutoff_;
  mutable std::vector<double> cache_;
};

}  // namespace dato
