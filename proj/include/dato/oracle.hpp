#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dato/common.hpp"
#include "dato/cost_model.hpp"

namespace dato {

/// Gradient and Hessian of the summed cost at (r, t).
inline Vector global_grad(const std::vector<CostPtr>& costs, const Vector& r,
                          double t) {
  Vector g = Vector::Zero(r.size());
  for (const auto& c : costs) g += c->grad(r, t);
  return g;
}

inline Matrix global_hessian(const std::vector<CostPtr>& costs,
                             const Vector& r, double t) {
  Matrix h = Matrix::Zero(r.size(), r.size());
  for (const auto& c : costs) h += c->hessian(r, t);
  return h;
}

/// Minimiser of a sum of quadratics: solves (sum H_i) r = -(sum R_i), with
/// R_i read off as grad at the origin.
inline Vector quadratic_minimizer(const std::vector<CostPtr>& costs,
                                  double t) {
  const int m = costs.front()->dim();
  const Vector origin = Vector::Zero(m);
  const Matrix h = global_hessian(costs, origin, t);
  const Vector r0 = global_grad(costs, origin, t);
  return Eigen::PartialPivLU<Matrix>(h).solve(-r0);
}

struct NewtonResult {
  Vector minimizer;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Damped Newton iteration on grad f(r, t) = 0. The global Hessian is
/// positive definite under the strong-convexity assumption, so the Newton
/// direction is a descent direction for |grad|; steps are halved when the
/// residual fails to decrease.
inline NewtonResult newton_minimizer(const std::vector<CostPtr>& costs,
                                     double t, const Vector& warm_start,
                                     double tol = 1e-10, int max_iter = 100) {
  Vector r = warm_start;
  Vector g = global_grad(costs, r, t);
  for (int it = 0; it < max_iter; ++it) {
    const double gn = g.norm();
    if (gn < tol) return {r, it, gn};
    const Matrix h = global_hessian(costs, r, t);
    const Vector step = Eigen::LDLT<Matrix>(h).solve(-g);
    double lambda = 1.0;
    for (int back = 0; back < 50; ++back) {
      const Vector trial = r + lambda * step;
      const Vector gt = global_grad(costs, trial, t);
      if (gt.norm() < gn || back == 49) {
        r = trial;
        g = gt;
        break;
      }
      lambda *= 0.5;
    }
  }
  if (g.norm() < tol) return {r, max_iter, g.norm()};
  throw oracle_error("newton oracle failed to converge at t = " +
                     std::to_string(t));
}

/// Reference trajectory r*(t) on a sample grid. In quadratic mode each
/// sample is a direct linear solve; otherwise damped Newton warm-started
/// from the previous sample. Independent of the distributed dynamics.
inline std::vector<Vector> optimal_trajectory(const std::vector<CostPtr>& costs,
                                              const std::vector<double>& grid,
                                              bool quadratic) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  Vector warm = Vector::Zero(costs.front()->dim());
  for (double t : grid) {
    Vector r = quadratic ? quadratic_minimizer(costs, t)
                         : newton_minimizer(costs, t, warm).minimizer;
    warm = r;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dato
