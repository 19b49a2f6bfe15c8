#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dato/common.hpp"
#include "dato/graph.hpp"

namespace dato {

/// Elementwise signum; sgn(0) = 0. Preserves symmetry of symmetric inputs.
inline Matrix matrix_sign(const Matrix& a) {
  return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

namespace detail {

// Analytic eigenvalues of a symmetric 3x3 (Cardano on the shifted matrix).
// Called once per agent per step, so it avoids the iterative solver.
inline void sym_eigenvalues_3(const Matrix& a, double out[3]) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  if (p1 == 0.0) {
    out[0] = a(0, 0);
    out[1] = a(1, 1);
    out[2] = a(2, 2);
    return;
  }
  const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
  const double d0 = a(0, 0) - q, d1 = a(1, 1) - q, d2 = a(2, 2) - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  // det((A - qI)/p) / 2
  const double b00 = d0 / p, b11 = d1 / p, b22 = d2 / p;
  const double b01 = a(0, 1) / p, b02 = a(0, 2) / p, b12 = a(1, 2) / p;
  double r = 0.5 * (b00 * (b11 * b22 - b12 * b12) -
                    b01 * (b01 * b22 - b12 * b02) +
                    b02 * (b01 * b12 - b11 * b02));
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double two_pi_third = 2.0943951023931953;
  out[0] = q + 2.0 * p * std::cos(phi);
  out[2] = q + 2.0 * p * std::cos(phi + two_pi_third);
  out[1] = 3.0 * q - out[0] - out[2];
}

}  // namespace detail

/// Minimum absolute eigenvalue of a symmetric matrix. Dimensions 1-3 use
/// closed forms; larger inputs fall back to the iterative solver.
inline double min_abs_eig(const Matrix& z) {
  switch (z.rows()) {
    case 1:
      return std::abs(z(0, 0));
    case 2: {
      const double mid = 0.5 * (z(0, 0) + z(1, 1));
      const double disc = std::hypot(0.5 * (z(0, 0) - z(1, 1)), z(0, 1));
      return std::min(std::abs(mid + disc), std::abs(mid - disc));
    }
    case 3: {
      double lam[3];
      detail::sym_eigenvalues_3(z, lam);
      return std::min({std::abs(lam[0]), std::abs(lam[1]), std::abs(lam[2])});
    }
    default: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(z, Eigen::EigenvaluesOnly);
      return es.eigenvalues().cwiseAbs().minCoeff();
    }
  }
}

/// Dead-zone floor h0 = gamma * h1 / N for a strong-convexity bound h1 (mu1
/// for the non-quadratic family) and gain fraction 0 < gamma < 1.
inline double select_h0(double h1_or_mu1, int n_agents, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw config_error("select_h0: gamma must lie in (0, 1)");
  if (!(h1_or_mu1 > 0.0)) throw config_error("select_h0: h1 must be positive");
  if (n_agents < 1) throw config_error("select_h0: need at least one agent");
  return gamma * h1_or_mu1 / static_cast<double>(n_agents);
}

/// Dead-zone pass on one estimator output. The hold register starts at
/// h0 * I and is refreshed with every safe sample after t = 0, so the result
/// always satisfies min_p |lambda_p| >= h0 and stays invertible.
///
/// The input must be symmetric up to 1e-9; it is exactly symmetrised before
/// the eigensolve to strip integration drift. Returns the shaped matrix and
/// its minimum absolute eigenvalue (the one the decision was made with).
/// Callers that already track the input's asymmetry can pass it to skip the
/// internal scan.
inline std::pair<Matrix, double> dza(const Matrix& z, Matrix& hold,
                                     double& hold_floor, double h0,
                                     bool is_initial,
                                     double known_asymmetry = -1.0) {
  const double asym = known_asymmetry >= 0.0
                          ? known_asymmetry
                          : (z - z.transpose()).cwiseAbs().maxCoeff();
  if (!(asym < 1e-9))
    throw invariant_violation("dza: estimator output lost symmetry");
  const Matrix zs = 0.5 * (z + z.transpose());
  const double lambda0 = min_abs_eig(zs);
  if (lambda0 < h0) return {hold, hold_floor};
  if (!is_initial) {
    hold = zs;
    hold_floor = lambda0;
  }
  return {zs, lambda0};
}

/// Per-agent dead-zone registers for a whole network.
class DzaBank {
 public:
  DzaBank(int n_agents, int m, double h0) : h0_(h0) {
    if (!(h0 > 0.0)) throw config_error("dza: h0 must be positive");
    hold_.assign(n_agents, Matrix(h0 * Matrix::Identity(m, m)));
    floor_.assign(n_agents, h0);
  }

  std::pair<Matrix, double> apply(int agent, const Matrix& z, bool is_initial,
                                  double known_asymmetry = -1.0) {
    return dza(z, hold_[agent], floor_[agent], h0_, is_initial,
               known_asymmetry);
  }

  double h0() const { return h0_; }
  const Matrix& hold(int agent) const { return hold_[agent]; }

 private:
  double h0_;
  std::vector<Matrix> hold_;
  std::vector<double> floor_;
};

/// Estimator trajectory state: the integrator variables xi_i plus the
/// dead-zone registers. z_i = xi_i + H_i(t) is formed by the caller.
struct EstimatorState {
  std::vector<Matrix> xi;
  DzaBank dza;
};

inline EstimatorState make_estimator_state(int n_agents, int m, double h0) {
  return EstimatorState{std::vector<Matrix>(n_agents, Matrix::Zero(m, m)),
                        DzaBank(n_agents, m, h0)};
}

namespace detail {

// rhs[i] -= w sgn(z_i - z_j), rhs[j] += w sgn(z_i - z_j), entrywise with the
// identical product on both sides so the network sum cancels exactly.
inline void accumulate_signed_edge(Matrix& rhs_i, Matrix& rhs_j,
                                   const Matrix& zi, const Matrix& zj,
                                   double w) {
  const auto m = zi.rows();
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index r = 0; r < m; ++r) {
      const double d = zi(r, c) - zj(r, c);
      if (d == 0.0) continue;
      const double term = d > 0.0 ? w : -w;
      rhs_i(r, c) -= term;
      rhs_j(r, c) += term;
    }
}

inline void fixed_gain_rhs_into(const std::vector<Matrix>& z, const Graph& g,
                                double omega, std::vector<Matrix>& rhs) {
  const auto m = z.empty() ? 0 : z.front().rows();
  rhs.resize(z.size());
  for (auto& r : rhs) {
    r.resize(m, m);
    r.setZero();
  }
  for (auto [i, j] : g.edges())
    accumulate_signed_edge(rhs[i], rhs[j], z[i], z[j], omega);
}

}  // namespace detail

/// xi'_i = -omega sum_{j in N_i} sgn(z_i - z_j). Edge terms are accumulated
/// antisymmetrically so the xi-sum is conserved to rounding.
inline std::vector<Matrix> fixed_gain_rhs(const std::vector<Matrix>& z,
                                          const Graph& g, double omega) {
  std::vector<Matrix> rhs;
  detail::fixed_gain_rhs_into(z, g, omega, rhs);
  return rhs;
}

/// Symmetric state-based edge gain for the non-quadratic estimator:
/// ((N-1)/2)(|rho'_i|_inf + |rho'_j|_inf) + margin.
inline double state_gain(int n_agents, double rate_bound_i,
                         double rate_bound_j, double margin) {
  return 0.5 * (n_agents - 1) * (rate_bound_i + rate_bound_j) + margin;
}

namespace detail {

inline void state_gain_rhs_into(const std::vector<Matrix>& z, const Graph& g,
                                const std::vector<double>& rate_bounds,
                                double margin, std::vector<Matrix>& rhs) {
  if (margin < 0.0)
    throw config_error("state-gain estimator: margin must be nonnegative");
  const int n = g.num_nodes();
  const auto m = z.empty() ? 0 : z.front().rows();
  rhs.resize(z.size());
  for (auto& r : rhs) {
    r.resize(m, m);
    r.setZero();
  }
  for (auto [i, j] : g.edges()) {
    const double w = state_gain(n, rate_bounds[i], rate_bounds[j], margin);
    accumulate_signed_edge(rhs[i], rhs[j], z[i], z[j], w);
  }
}

}  // namespace detail

/// xi'_i = -sum_j omega_ij(t) sgn(z_i - z_j) with omega_ij built from the
/// agents' current Hessian-rate bounds |rho'_i|_inf.
inline std::vector<Matrix> state_gain_rhs(
    const std::vector<Matrix>& z, const Graph& g,
    const std::vector<double>& hessian_rate_bounds, double margin) {
  std::vector<Matrix> rhs;
  detail::state_gain_rhs_into(z, g, hessian_rate_bounds, margin, rhs);
  return rhs;
}

}  // namespace dato
