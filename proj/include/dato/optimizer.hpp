#pragma once

#include <cmath>
#include <vector>

#include "dato/common.hpp"
#include "dato/cost_model.hpp"
#include "dato/graph.hpp"

namespace dato {

/// Boundary-layer schedule eta_t = exp(-eps2 t).
inline double eta(double t, double eps2) { return std::exp(-eps2 * t); }

/// Chattering-free signum approximation S(v)_p = v_p / (|v_p| + eps1 * eta).
/// Each component lies in (-1, 1) while eta > 0; as eta -> 0 it approaches
/// sgn componentwise, with S(0) = 0.
inline Vector smoothed_sign(const Vector& v, double eps1, double eta_t) {
  return v.unaryExpr([layer = eps1 * eta_t](double p) {
    const double denom = std::abs(p) + layer;
    return denom > 0.0 ? p / denom : 0.0;
  });
}

namespace detail {

// Direct linear solve for the tiny systems in the feedforward path; cofactor
// formulas for m <= 3, LU beyond.
inline Vector solve_small(const Matrix& a, const Vector& b) {
  switch (a.rows()) {
    case 1:
      return Vector::Constant(1, b(0) / a(0, 0));
    case 2: {
      const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      Vector r(2);
      r << (a(1, 1) * b(0) - a(0, 1) * b(1)) / det,
          (a(0, 0) * b(1) - a(1, 0) * b(0)) / det;
      return r;
    }
    case 3: {
      const double c00 = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
      const double c01 = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
      const double c02 = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
      const double det = a(0, 0) * c00 + a(0, 1) * c01 + a(0, 2) * c02;
      const double c10 = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
      const double c11 = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
      const double c12 = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
      const double c20 = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
      const double c21 = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
      const double c22 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      Vector r(3);
      r << (c00 * b(0) + c10 * b(1) + c20 * b(2)) / det,
          (c01 * b(0) + c11 * b(1) + c21 * b(2)) / det,
          (c02 * b(0) + c12 * b(1) + c22 * b(2)) / det;
      return r;
    }
    default:
      return Eigen::PartialPivLU<Matrix>(a).solve(b);
  }
}

}  // namespace detail

/// Gradient feedback plus inverse-Hessian feedforward:
/// phi = -k grad f(x,t) - zhat^{-1} grad_t f(x,t). The inverse is applied by
/// linear solve; zhat comes from the dead-zone pass so it is never singular.
inline Vector phi(const CostModel& cost, const Matrix& zhat, const Vector& x,
                  double t, double k) {
  Vector ff = detail::solve_small(zhat, cost.grad_time_partial(x, t));
  if (!ff.allFinite())
    throw invariant_violation("phi: feedforward solve produced non-finite values");
  return -k * cost.grad(x, t) - ff;
}

/// Per-edge adaptive gains, stored once per unordered edge in the graph's
/// edge order so the symmetry alpha_ij = alpha_ji holds by construction.
struct AdaptiveGains {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// alpha_ij(0) = alpha0 and beta_ij(0) = m eps1 / eps2, the minimal initial
/// value that keeps beta nonnegative for all time.
inline AdaptiveGains init_adaptive_gains(const Graph& g, int m, double eps1,
                                         double eps2, double alpha0 = 0.0) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw config_error("adaptive gains: eps1 and eps2 must be positive");
  if (alpha0 < 0.0)
    throw config_error("adaptive gains: alpha0 must be nonnegative");
  const auto e = static_cast<std::size_t>(g.num_edges());
  return AdaptiveGains{std::vector<double>(e, alpha0),
                       std::vector<double>(e, m * eps1 / eps2)};
}

struct OptimizerState {
  std::vector<Vector> x;
  AdaptiveGains gains;
};

struct OptimizerDerivative {
  std::vector<Vector> x_dot;
  std::vector<double> alpha_dot;
  std::vector<double> beta_dot;
};

namespace detail {

// In-place right-hand-side evaluation into caller-owned buffers; the public
// wrapper below allocates them. Edge terms are evaluated once per unordered
// edge and applied with opposite signs, so the consensus part sums to zero
// exactly.
inline void optimizer_rhs_into(const std::vector<Vector>& x,
                               const std::vector<double>& alpha,
                               const std::vector<double>& beta,
                               const std::vector<Matrix>& zhat,
                               const std::vector<CostPtr>& costs,
                               const Graph& g, double t, double k, double eps1,
                               double eps2, std::vector<Vector>& x_dot,
                               std::vector<double>& alpha_dot,
                               std::vector<double>& beta_dot) {
  const int n = g.num_nodes();
  const int m = costs.front()->dim();
  const double eta_t = eta(t, eps2);
  const double layer = eps1 * eta_t;

  x_dot.resize(n);
  alpha_dot.resize(g.num_edges());
  beta_dot.resize(g.num_edges());
  for (int i = 0; i < n; ++i)
    x_dot[i] = phi(*costs[i], zhat[i], x[i], t, k);

  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [i, j] = g.edges()[e];
    double sq = 0.0, l1 = 0.0;
    for (int p = 0; p < m; ++p) {
      const double dp = x[i](p) - x[j](p);
      const double ad = std::abs(dp);
      const double denom = ad + layer;
      const double force =
          alpha[e] * dp + (denom > 0.0 ? beta[e] * dp / denom : 0.0);
      x_dot[i](p) -= force;
      x_dot[j](p) += force;
      sq += dp * dp;
      l1 += ad;
    }
    alpha_dot[e] = sq;
    beta_dot[e] = l1 - m * eps1 * eta_t;
  }
}

}  // namespace detail

/// One evaluation of the adaptive optimizer right-hand side:
///   x'_i     = -sum_j (alpha_ij (x_i - x_j) + beta_ij S(x_i - x_j)) + phi_i
///   alpha'_e = |x_i - x_j|^2
///   beta'_e  = |x_i - x_j|_1 - m eps1 eta_t
inline OptimizerDerivative optimizer_rhs(const OptimizerState& state,
                                         const std::vector<Matrix>& zhat,
                                         const std::vector<CostPtr>& costs,
                                         const Graph& g, double t, double k,
                                         double eps1, double eps2) {
  const int n = g.num_nodes();
  if (static_cast<int>(state.x.size()) != n ||
      static_cast<int>(costs.size()) != n ||
      static_cast<int>(zhat.size()) != n ||
      state.gains.alpha.size() != static_cast<std::size_t>(g.num_edges()))
    throw config_error("optimizer_rhs: state does not match the graph");

  OptimizerDerivative d;
  detail::optimizer_rhs_into(state.x, state.gains.alpha, state.gains.beta,
                             zhat, costs, g, t, k, eps1, eps2, d.x_dot,
                             d.alpha_dot, d.beta_dot);
  return d;
}

/// Feedback gain from the closed-loop convergence condition:
/// quadratic family   k > h2 N sqrt(m) / h1^2,
/// general family     k > (h2 + mu4) N sqrt(m) / mu1^2,
/// returned with the caller's excess margin added.
inline double select_k(const CostAssumptions& a, int n_agents, int m,
                       double eps_margin, bool general) {
  a.validate();
  double rate = a.h2;
  if (general) {
    if (!a.mu4)
      throw config_error("select_k: general mode requires the mu4 bound");
    rate += *a.mu4;
  }
  return rate * n_agents * std::sqrt(static_cast<double>(m)) / (a.h1 * a.h1) +
         eps_margin;
}

}  // namespace dato
