#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "dato/cost_model.hpp"
#include "dato/fade.hpp"

namespace dato {

struct CostSet {
  std::vector<CostPtr> models;
  CostAssumptions assumptions;
  int dim = 0;
  bool quadratic = false;  // every model quadratic (x-independent Hessians)
};

namespace detail {

inline double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

// Agents 1..6: 2|y|^2 + 0.1 i sin(t) 1'y.
inline CostPtr ring_quadratic(int i) {
  const double a = 0.1 * i;
  const Matrix h = 4.0 * Matrix::Identity(3, 3);
  const Matrix zm = Matrix::Zero(3, 3);
  return std::make_shared<QuadraticCost>(
      3, [h](double) { return h; }, [zm](double) { return zm; },
      [a](double t) { return Vector::Constant(3, a * std::sin(t)); },
      [a](double t) { return Vector::Constant(3, a * std::cos(t)); });
}

// Agents 7..12: (y1 + cos(t) y2 + 0.1 i y3)^2 + cos(t) y1 + 0.1 i y2 + y3,
// a rank-one quadratic H(t) = 2 v(t) v(t)' with v = (1, cos t, 0.1 i).
inline CostPtr rank_one_quadratic(int i) {
  const double a = 0.1 * i;
  auto v = [a](double t) { return Vector{{1.0, std::cos(t), a}}; };
  auto v_dot = [](double t) { return Vector{{0.0, -std::sin(t), 0.0}}; };
  return std::make_shared<QuadraticCost>(
      3, [v](double t) { return Matrix(2.0 * v(t) * v(t).transpose()); },
      [v, v_dot](double t) {
        const Vector a_ = v(t), b_ = v_dot(t);
        return Matrix(2.0 * (b_ * a_.transpose() + a_ * b_.transpose()));
      },
      [a](double t) { return Vector{{std::cos(t), a, 1.0}}; },
      [](double t) { return Vector{{-std::sin(t), 0.0, 0.0}}; });
}

inline CostPtr separable3(ScalarCost s) {
  return std::make_shared<SeparableCost>(3, std::move(s));
}

}  // namespace detail

/// The twenty local costs of the 20-agent benchmark (decision variable in
/// R^3): six strongly convex quadratics, six rank-one time-varying
/// quadratics, and eight coordinate-separable costs several of which are
/// non-convex. Only the sum is strongly convex.
inline CostSet example1_costs() {
  using detail::sigmoid;
  CostSet set;
  set.dim = 3;
  set.quadratic = false;

  for (int i = 1; i <= 6; ++i)
    set.models.push_back(detail::ring_quadratic(i));
  for (int i = 7; i <= 12; ++i)
    set.models.push_back(detail::rank_one_quadratic(i));

  // f13 = sum exp(-t) y^2
  set.models.push_back(detail::separable3(
      {[](double y, double t) { return std::exp(-t) * y * y; },
       [](double y, double t) { return 2.0 * std::exp(-t) * y; },
       [](double y, double t) { return -2.0 * std::exp(-t) * y; },
       [](double, double t) { return 2.0 * std::exp(-t); },
       [](double, double t) { return -2.0 * std::exp(-t); },
       [](double, double) { return 0.0; }}));

  // f14 = sum sin(t) y^2
  set.models.push_back(detail::separable3(
      {[](double y, double t) { return std::sin(t) * y * y; },
       [](double y, double t) { return 2.0 * std::sin(t) * y; },
       [](double y, double t) { return 2.0 * std::cos(t) * y; },
       [](double, double t) { return 2.0 * std::sin(t); },
       [](double, double t) { return 2.0 * std::cos(t); },
       [](double, double) { return 0.0; }}));

  // f15 = sum -(y - 2)^2, concave
  set.models.push_back(detail::separable3(
      {[](double y, double) { return -(y - 2.0) * (y - 2.0); },
       [](double y, double) { return -2.0 * (y - 2.0); },
       [](double, double) { return 0.0; },
       [](double, double) { return -2.0; },
       [](double, double) { return 0.0; },
       [](double, double) { return 0.0; }}));

  // f16 = sum sin(y)
  set.models.push_back(detail::separable3(
      {[](double y, double) { return std::sin(y); },
       [](double y, double) { return std::cos(y); },
       [](double, double) { return 0.0; },
       [](double y, double) { return -std::sin(y); },
       [](double, double) { return 0.0; },
       [](double y, double) { return -std::cos(y); }}));

  // f17 = sum (tanh(t) + 1) ln(1 + e^y)
  set.models.push_back(detail::separable3(
      {[](double y, double t) {
         return (std::tanh(t) + 1.0) * std::log1p(std::exp(y));
       },
       [](double y, double t) { return (std::tanh(t) + 1.0) * sigmoid(y); },
       [](double y, double t) {
         const double sech = 1.0 / std::cosh(t);
         return sech * sech * sigmoid(y);
       },
       [](double y, double t) {
         const double s = sigmoid(y);
         return (std::tanh(t) + 1.0) * s * (1.0 - s);
       },
       [](double y, double t) {
         const double s = sigmoid(y);
         const double sech = 1.0 / std::cosh(t);
         return sech * sech * s * (1.0 - s);
       },
       [](double y, double t) {
         const double s = sigmoid(y);
         return (std::tanh(t) + 1.0) * s * (1.0 - s) * (1.0 - 2.0 * s);
       }}));

  // f18 = sum y / (y^2 + 1)
  set.models.push_back(detail::separable3(
      {[](double y, double) { return y / (y * y + 1.0); },
       [](double y, double) {
         const double q = 1.0 + y * y;
         return (1.0 - y * y) / (q * q);
       },
       [](double, double) { return 0.0; },
       [](double y, double) {
         const double q = 1.0 + y * y;
         return (2.0 * y * y * y - 6.0 * y) / (q * q * q);
       },
       [](double, double) { return 0.0; },
       [](double y, double) {
         const double q = 1.0 + y * y;
         const double y2 = y * y;
         return (-6.0 * y2 * y2 + 36.0 * y2 - 6.0) / (q * q * q * q);
       }}));

  // f19 = sum -(1/(t+1)) exp(-y^2)
  set.models.push_back(detail::separable3(
      {[](double y, double t) { return -std::exp(-y * y) / (t + 1.0); },
       [](double y, double t) {
         return 2.0 * y * std::exp(-y * y) / (t + 1.0);
       },
       [](double y, double t) {
         return -2.0 * y * std::exp(-y * y) / ((t + 1.0) * (t + 1.0));
       },
       [](double y, double t) {
         return (2.0 - 4.0 * y * y) * std::exp(-y * y) / (t + 1.0);
       },
       [](double y, double t) {
         return -(2.0 - 4.0 * y * y) * std::exp(-y * y) /
                ((t + 1.0) * (t + 1.0));
       },
       [](double y, double t) {
         return (8.0 * y * y * y - 12.0 * y) * std::exp(-y * y) / (t + 1.0);
       }}));

  // f20 = sum y^2 + exp(-t) ln(1 + y^2)
  set.models.push_back(detail::separable3(
      {[](double y, double t) {
         return y * y + std::exp(-t) * std::log1p(y * y);
       },
       [](double y, double t) {
         return 2.0 * y + std::exp(-t) * 2.0 * y / (1.0 + y * y);
       },
       [](double y, double t) {
         return -std::exp(-t) * 2.0 * y / (1.0 + y * y);
       },
       [](double y, double t) {
         const double q = 1.0 + y * y;
         return 2.0 + std::exp(-t) * (2.0 - 2.0 * y * y) / (q * q);
       },
       [](double y, double t) {
         const double q = 1.0 + y * y;
         return -std::exp(-t) * (2.0 - 2.0 * y * y) / (q * q);
       },
       [](double y, double t) {
         const double q = 1.0 + y * y;
         return std::exp(-t) * (4.0 * y * y * y - 12.0 * y) / (q * q * q);
       }}));

  // h1: empirical floor of the minimum eigenvalue of the summed Hessian over
  // a dense (y, t) grid is ~20.5 (the six fixed quadratics contribute 24 and
  // the non-convex terms subtract at most ~3.5 jointly). h2 bounds the rate
  // of the quadratic blocks' Hessians, dominated by the rank-one family.
  set.assumptions.h1 = 18.0;
  set.assumptions.h2 = 6.0;
  set.assumptions.mu4 = 0.0;
  set.assumptions.mu2 = 0.0;
  set.assumptions.mu3 = 3.5;
  set.assumptions.mu5 = 4.0;
  return set;
}

/// The six-agent relay benchmark (decision variable in R^2). Costs are
/// expressed in the formation-reference frame: agent i minimises
/// c_i(t) |w - b_i(t)|^2 with b_i = d_i - tau_i, so the common minimiser of
/// the sum is the formation reference and agent positions are w + tau_i.
struct Example2Setup {
  CostSet costs;
  std::vector<Vector> offsets;         // tau_i
  std::vector<Vector> initial_states;  // paper's x_i(0), world frame
  std::vector<double> fade_cutoffs;    // +inf where no fade occurs
  double fade_time_constant = 0.0;
};

namespace detail {

inline CostPtr faded_tracking_cost(std::shared_ptr<FadeCoefficient> c,
                                   std::function<Vector(double)> b,
                                   std::function<Vector(double)> b_dot) {
  // c(t) |w - b(t)|^2 as a quadratic: H = 2cI, R = -2cb, d = c|b|^2.
  auto h = [c](double t) {
    return Matrix(2.0 * c->value(t) * Matrix::Identity(2, 2));
  };
  auto h_dot = [c](double t) {
    return Matrix(2.0 * c->rate(t) * Matrix::Identity(2, 2));
  };
  auto r = [c, b](double t) { return Vector(-2.0 * c->value(t) * b(t)); };
  auto r_dot = [c, b, b_dot](double t) {
    return Vector(-2.0 * (c->rate(t) * b(t) + c->value(t) * b_dot(t)));
  };
  auto offset = [c, b](double t) { return c->value(t) * b(t).squaredNorm(); };
  return std::make_shared<QuadraticCost>(2, h, h_dot, r, r_dot, offset);
}

// First time p(t) drops below threshold, by bisection on a bracketing scan.
inline double power_cutoff(const std::function<double(double)>& p,
                           double threshold, double horizon) {
  double lo = 0.0;
  double hi = -1.0;
  for (double t = 0.0; t < horizon; t += 0.25) {
    if (p(t + 0.25) < threshold) {
      lo = t;
      hi = t + 0.25;
      break;
    }
  }
  if (hi < 0.0) return std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p(mid) < threshold ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Builds the relay cost set. Agent 3's coefficient fades to zero once its
/// transmission power drops below p0 = 2 (shortly after t = 32 s); agent 5's
/// fades from the attack instant t = 67 s. The reported h2 scales with
/// 1/fade_time_constant since the fade onset dominates |dH/dt|.
inline Example2Setup example2_costs(double fade_time_constant = 2.0) {
  if (!(fade_time_constant > 0.0))
    throw config_error("example2: fade time constant must be positive");

  constexpr double kPowerFloor = 2.0;
  constexpr double kAttackTime = 67.0;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::function<double(double)>> power = {
      [](double) { return 10.0; },
      [](double) { return 10.0; },
      [](double t) { return 10.0 * std::exp(-0.05 * t); },
      [](double) { return 8.0; },
      [](double t) { return 10.0 / (1.0 + 0.06 * t); },
      [](double t) { return 6.0 + std::sin(0.3 * t); }};

  std::vector<std::function<Vector(double)>> pos = {
      [](double) { return Vector{{30.0, 30.0}}; },
      [](double t) { return Vector{{30.0 + 10.0 * std::cos(0.3 * t), 0.0}}; },
      [](double) { return Vector{{-30.0, -30.0}}; },
      [](double t) {
        return Vector{{-30.0, -30.0 + 10.0 * std::sin(0.3 * t)}};
      },
      [](double) { return Vector{{-30.0, 0.0}}; },
      [](double) { return Vector{{-30.0, 30.0}}; }};

  std::vector<std::function<Vector(double)>> pos_dot = {
      [](double) { return Vector{{0.0, 0.0}}; },
      [](double t) { return Vector{{-3.0 * std::sin(0.3 * t), 0.0}}; },
      [](double) { return Vector{{0.0, 0.0}}; },
      [](double t) { return Vector{{0.0, 3.0 * std::cos(0.3 * t)}}; },
      [](double) { return Vector{{0.0, 0.0}}; },
      [](double) { return Vector{{0.0, 0.0}}; }};

  Example2Setup setup;
  setup.fade_time_constant = fade_time_constant;
  setup.offsets = {Vector{{5.0, 10.0}},  Vector{{10.0, 0.0}},
                   Vector{{5.0, -10.0}}, Vector{{-5.0, 10.0}},
                   Vector{{-10.0, 0.0}}, Vector{{-5.0, 10.0}}};
  setup.initial_states = {Vector{{-5.0, 10.0}},  Vector{{-15.0, 10.0}},
                          Vector{{-25.0, 10.0}}, Vector{{-25.0, 0.0}},
                          Vector{{-15.0, 0.0}},  Vector{{-5.0, 0.0}}};
  setup.fade_cutoffs = {
      inf, inf, detail::power_cutoff(power[2], kPowerFloor, 300.0),
      inf, kAttackTime, inf};

  setup.costs.dim = 2;
  setup.costs.quadratic = true;
  for (int i = 0; i < 6; ++i) {
    auto p = power[i];
    auto coeff = std::make_shared<FadeCoefficient>(
        [p](double t) { return 1.0 / p(t); }, 1.0 / p(0.0),
        fade_time_constant, setup.fade_cutoffs[i]);
    const Vector tau = setup.offsets[i];
    auto d = pos[i];
    auto d_dot = pos_dot[i];
    setup.costs.models.push_back(detail::faded_tracking_cost(
        coeff, [d, tau](double t) { return Vector(d(t) - tau); }, d_dot));
  }

  // Worst-case coefficient at a fade onset is 1/p0 plus the filter lag, so
  // |dH/dt|_inf <= 2 * 0.52 / tau_f there; ordinary tracking contributes a
  // few hundredths at most. h1 is the post-fade floor of 2 sum_i c_i.
  setup.costs.assumptions.h1 = 0.9;
  setup.costs.assumptions.h2 = 1.04 / fade_time_constant + 0.05;
  return setup;
}

}  // namespace dato
