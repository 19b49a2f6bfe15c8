#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dato/common.hpp"
#include "dato/cost_model.hpp"
#include "dato/estimator.hpp"
#include "dato/example_costs.hpp"
#include "dato/graph.hpp"
#include "dato/optimizer.hpp"
#include "dato/oracle.hpp"

namespace dato {

enum class EstimatorMode { fixed_gain, state_gain };
enum class IntegratorScheme { euler, rk4 };

struct SimParams {
  EstimatorMode estimator_mode = EstimatorMode::fixed_gain;
  double omega = 1.0;              // fixed-gain estimator
  double state_gain_margin = 0.1;  // state-gain excess over the strict bound
  double k = 1.0;
  double h0 = 0.1;
  double eps1 = 1.0;
  double eps2 = 1.0;
  double alpha0 = 0.0;
  double dt = 1e-3;
  double t_final = 10.0;
  int record_stride = 100;
  IntegratorScheme scheme = IntegratorScheme::euler;
  std::vector<Vector> x0;
  std::vector<Matrix> xi0;  // empty -> zeros (the canonical zero-sum choice)
  bool quadratic_oracle = false;
  double escape_bound = 1e6;
};

/// Validates a (graph, costs, params) triple. Violations of hard
/// preconditions throw config_error; soft issues (a feedback gain below the
/// closed-loop bound) come back as warnings.
inline std::vector<std::string> validate_sim(const Graph& g,
                                             const std::vector<CostPtr>& costs,
                                             const CostAssumptions& a,
                                             const SimParams& p) {
  a.validate();
  const int n = g.num_nodes();
  if (static_cast<int>(costs.size()) != n)
    throw config_error("sim: cost count does not match the graph");
  const int m = costs.front()->dim();
  for (const auto& c : costs)
    if (c->dim() != m) throw config_error("sim: mixed cost dimensions");
  if (static_cast<int>(p.x0.size()) != n)
    throw config_error("sim: initial state count does not match the graph");
  for (const auto& x : p.x0)
    if (x.size() != m) throw config_error("sim: initial state has wrong dimension");
  if (!p.xi0.empty()) {
    if (static_cast<int>(p.xi0.size()) != n)
      throw config_error("sim: xi0 count does not match the graph");
    for (const auto& xi : p.xi0)
      if (xi.rows() != m || xi.cols() != m)
        throw config_error("sim: xi0 has wrong dimensions");
  }
  if (!(p.dt > 0.0)) throw config_error("sim: dt must be positive");
  if (!(p.t_final > p.dt)) throw config_error("sim: t_final must exceed dt");
  if (p.record_stride < 1) throw config_error("sim: record_stride must be >= 1");
  if (!(p.h0 > 0.0)) throw config_error("sim: h0 must be positive");
  if (!(p.k > 0.0)) throw config_error("sim: k must be positive");
  if (!(p.eps1 > 0.0) || !(p.eps2 > 0.0))
    throw config_error("sim: eps1 and eps2 must be positive");
  if (p.alpha0 < 0.0) throw config_error("sim: alpha0 must be nonnegative");
  if (p.estimator_mode == EstimatorMode::fixed_gain && !(p.omega > a.h2))
    throw config_error("sim: fixed estimator gain omega must exceed h2 (omega=" +
                       std::to_string(p.omega) + ", h2=" + std::to_string(a.h2) + ")");
  if (p.estimator_mode == EstimatorMode::state_gain && p.state_gain_margin < 0.0)
    throw config_error("sim: state-gain margin must be nonnegative");

  std::vector<std::string> warnings;
  const double k_bound =
      select_k(a, n, m, 0.0, p.estimator_mode == EstimatorMode::state_gain);
  if (p.k <= k_bound)
    warnings.push_back("feedback gain k = " + std::to_string(p.k) +
                       " is at or below the convergence bound " +
                       std::to_string(k_bound) + "; running anyway");
  return warnings;
}

/// Whole-run extrema tracked at every integration step (not only at
/// recorded samples).
struct RunMonitors {
  double max_xi_sum_inf = 0.0;      // conservation residue |sum_i xi_i|_inf
  double max_z_asymmetry = 0.0;     // max |z - z'| entry over agents and steps
  double min_zhat_eig = std::numeric_limits<double>::infinity();
  double max_state_norm = 0.0;      // max_i |x_i|
  double min_beta = std::numeric_limits<double>::infinity();
  double max_alpha_decrease = 0.0;  // most negative alpha increment
  double estimator_settle_time = 0.0;  // last instant max_i |z_i - Hbar|_F >= 1e-2
  double final_estimator_error = 0.0;
  double max_estimator_error = 0.0;
  double max_lemma1_ratio = 0.0;    // |zhat - Hbar| / |z - Hbar|
  double max_oracle_grad_norm = 0.0;
  double max_oracle_route_gap = 0.0;  // only populated for quadratic sets
};

struct Trajectory {
  int n = 0;
  int m = 0;
  std::vector<double> times;
  std::vector<std::vector<Vector>> x;                // [sample][agent]
  std::vector<Vector> r_star;                        // [sample]
  std::vector<std::vector<double>> tracking_error;   // |x_i - r*|
  std::vector<double> consensus_error;               // |e|, e = (I - 11'/N) x
  std::vector<double> average_error;                 // |mean(x) - r*|
  std::vector<double> estimator_error;               // max_i |z_i - Hbar|_F
  std::vector<std::vector<double>> alpha;            // [sample][edge]
  std::vector<std::vector<double>> beta;
  std::vector<double> min_zhat_eig;                  // per sample
  RunMonitors monitors;
};

constexpr double kEstimatorSettleTol = 1e-2;

namespace detail {

struct SimState {
  std::vector<Vector> x;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<Matrix> xi;
};

struct SimDerivative {
  std::vector<Vector> x_dot;
  std::vector<double> alpha_dot;
  std::vector<double> beta_dot;
  std::vector<Matrix> xi_dot;
};

inline std::vector<Matrix> estimator_outputs(const std::vector<CostPtr>& costs,
                                             const SimState& s, double t) {
  std::vector<Matrix> z(s.xi.size());
  for (std::size_t i = 0; i < s.xi.size(); ++i)
    z[i] = s.xi[i] + costs[i]->hessian(s.x[i], t);
  return z;
}

// One right-hand-side evaluation written into d's reusable buffers. z must
// be the estimator outputs of s at t; zhat stays frozen for the whole step
// (dead zone runs once per step).
inline void derivative(const SimState& s, const std::vector<Matrix>& z,
                       const std::vector<Matrix>& zhat,
                       const std::vector<CostPtr>& costs, const Graph& g,
                       const SimParams& p, double t, SimDerivative& d,
                       std::vector<double>& bounds_buf) {
  optimizer_rhs_into(s.x, s.alpha, s.beta, zhat, costs, g, t, p.k, p.eps1,
                     p.eps2, d.x_dot, d.alpha_dot, d.beta_dot);
  if (p.estimator_mode == EstimatorMode::fixed_gain) {
    fixed_gain_rhs_into(z, g, p.omega, d.xi_dot);
  } else {
    bounds_buf.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      bounds_buf[i] = costs[i]
                          ->hessian_time_derivative(s.x[i], d.x_dot[i], t)
                          .cwiseAbs()
                          .maxCoeff();
    state_gain_rhs_into(z, g, bounds_buf, p.state_gain_margin, d.xi_dot);
  }
}

inline void axpy(SimState& s, double h, const SimDerivative& d) {
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    s.x[i] += h * d.x_dot[i];
    s.xi[i] += h * d.xi_dot[i];
  }
  for (std::size_t e = 0; e < s.alpha.size(); ++e) {
    s.alpha[e] += h * d.alpha_dot[e];
    s.beta[e] += h * d.beta_dot[e];
  }
}

inline SimState stepped(const SimState& s, double h, const SimDerivative& d) {
  SimState out = s;
  axpy(out, h, d);
  return out;
}

inline void check_finite(const SimState& s, double t) {
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!s.x[i].allFinite())
      throw numerical_divergence("non-finite state x at t = " +
                                 std::to_string(t) + ", agent " +
                                 std::to_string(i));
    if (!s.xi[i].allFinite())
      throw numerical_divergence("non-finite estimator state xi at t = " +
                                 std::to_string(t) + ", agent " +
                                 std::to_string(i));
  }
  for (std::size_t e = 0; e < s.alpha.size(); ++e)
    if (!std::isfinite(s.alpha[e]) || !std::isfinite(s.beta[e]))
      throw numerical_divergence("non-finite adaptive gain at t = " +
                                 std::to_string(t) + ", edge " +
                                 std::to_string(e));
}

}  // namespace detail

/// Integrates the closed loop (estimator -> dead zone -> optimizer) with a
/// fixed step and returns the recorded trajectory plus whole-run monitors.
/// Deterministic: identical inputs give a bitwise-identical Trajectory.
inline Trajectory run(const Graph& g, const std::vector<CostPtr>& costs,
                      const CostAssumptions& assumptions, const SimParams& p) {
  validate_sim(g, costs, assumptions, p);
  const int n = g.num_nodes();
  const int m = costs.front()->dim();
  const auto n_steps = static_cast<long>(std::llround(p.t_final / p.dt));

  detail::SimState s;
  s.x = p.x0;
  const auto gains = init_adaptive_gains(g, m, p.eps1, p.eps2, p.alpha0);
  s.alpha = gains.alpha;
  s.beta = gains.beta;
  s.xi = p.xi0.empty() ? std::vector<Matrix>(n, Matrix::Zero(m, m)) : p.xi0;

  DzaBank bank(n, m, p.h0);
  Trajectory traj;
  traj.n = n;
  traj.m = m;
  RunMonitors& mon = traj.monitors;
  for (double b : s.beta) mon.min_beta = std::min(mon.min_beta, b);
  for (const auto& x : s.x)
    mon.max_state_norm = std::max(mon.max_state_norm, x.norm());

  std::vector<Matrix> zhat(n);
  std::vector<Matrix> z(n);
  Matrix h_bar(m, m), xi_sum(m, m);
  std::vector<double> alpha_before(s.alpha.size());
  std::vector<double> bounds_buf;
  detail::SimDerivative d1, d2, d3, d4;
  for (long step = 0; step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * p.dt;

    h_bar.setZero();
    xi_sum.setZero();
    for (int i = 0; i < n; ++i) {
      const Matrix h = costs[i]->hessian(s.x[i], t);
      h_bar += h;
      xi_sum += s.xi[i];
      z[i] = s.xi[i] + h;
    }
    h_bar /= static_cast<double>(n);
    mon.max_xi_sum_inf =
        std::max(mon.max_xi_sum_inf, xi_sum.cwiseAbs().maxCoeff());

    double est_err = 0.0;
    double min_eig_step = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double asym = 0.0;
      for (int r = 0; r < m; ++r)
        for (int c = r + 1; c < m; ++c)
          asym = std::max(asym, std::abs(z[i](r, c) - z[i](c, r)));
      mon.max_z_asymmetry = std::max(mon.max_z_asymmetry, asym);

      const double dev = (z[i] - h_bar).norm();
      est_err = std::max(est_err, dev);

      auto [zh, floor] = bank.apply(i, z[i], step == 0, asym);
      min_eig_step = std::min(min_eig_step, floor);
      if (dev > 1e-12)
        mon.max_lemma1_ratio =
            std::max(mon.max_lemma1_ratio, (zh - h_bar).norm() / dev);
      zhat[i] = std::move(zh);
    }
    mon.max_estimator_error = std::max(mon.max_estimator_error, est_err);
    if (est_err >= kEstimatorSettleTol) mon.estimator_settle_time = t;
    if (step == n_steps) mon.final_estimator_error = est_err;
    mon.min_zhat_eig = std::min(mon.min_zhat_eig, min_eig_step);

    if (step % p.record_stride == 0 || step == n_steps) {
      traj.times.push_back(t);
      traj.x.push_back(s.x);
      traj.alpha.push_back(s.alpha);
      traj.beta.push_back(s.beta);
      traj.estimator_error.push_back(est_err);
      traj.min_zhat_eig.push_back(min_eig_step);
    }
    if (step == n_steps) break;

    alpha_before = s.alpha;
    detail::derivative(s, z, zhat, costs, g, p, t, d1, bounds_buf);
    if (p.scheme == IntegratorScheme::euler) {
      detail::axpy(s, p.dt, d1);
    } else {
      const double h = p.dt;
      const auto s2 = detail::stepped(s, 0.5 * h, d1);
      detail::derivative(s2, detail::estimator_outputs(costs, s2, t + 0.5 * h),
                         zhat, costs, g, p, t + 0.5 * h, d2, bounds_buf);
      const auto s3 = detail::stepped(s, 0.5 * h, d2);
      detail::derivative(s3, detail::estimator_outputs(costs, s3, t + 0.5 * h),
                         zhat, costs, g, p, t + 0.5 * h, d3, bounds_buf);
      const auto s4 = detail::stepped(s, h, d3);
      detail::derivative(s4, detail::estimator_outputs(costs, s4, t + h), zhat,
                         costs, g, p, t + h, d4, bounds_buf);
      detail::SimDerivative mix = d1;
      for (std::size_t i = 0; i < mix.x_dot.size(); ++i) {
        mix.x_dot[i] = (d1.x_dot[i] + 2.0 * d2.x_dot[i] + 2.0 * d3.x_dot[i] + d4.x_dot[i]) / 6.0;
        mix.xi_dot[i] = (d1.xi_dot[i] + 2.0 * d2.xi_dot[i] + 2.0 * d3.xi_dot[i] + d4.xi_dot[i]) / 6.0;
      }
      for (std::size_t e = 0; e < mix.alpha_dot.size(); ++e) {
        mix.alpha_dot[e] = (d1.alpha_dot[e] + 2.0 * d2.alpha_dot[e] +
                            2.0 * d3.alpha_dot[e] + d4.alpha_dot[e]) / 6.0;
        mix.beta_dot[e] = (d1.beta_dot[e] + 2.0 * d2.beta_dot[e] +
                           2.0 * d3.beta_dot[e] + d4.beta_dot[e]) / 6.0;
      }
      detail::axpy(s, p.dt, mix);
    }
    // A non-finite value persists once produced, so a strided scan aborts
    // within a few steps of the event.
    if (step % 16 == 0 || step + 1 == n_steps) detail::check_finite(s, t + p.dt);

    for (int i = 0; i < n; ++i)
      mon.max_state_norm = std::max(mon.max_state_norm, s.x[i].norm());
    for (std::size_t e = 0; e < s.alpha.size(); ++e) {
      mon.min_beta = std::min(mon.min_beta, s.beta[e]);
      const double alpha_inc = s.alpha[e] - alpha_before[e];
      if (alpha_inc < 0.0)
        mon.max_alpha_decrease = std::max(mon.max_alpha_decrease, -alpha_inc);
    }
  }

  // Reference trajectory and error metrics on the recorded grid. The oracle
  // only sees the cost set, never the distributed state.
  traj.r_star = optimal_trajectory(costs, traj.times, p.quadratic_oracle);
  std::vector<Vector> newton_check;
  if (p.quadratic_oracle)
    newton_check = optimal_trajectory(costs, traj.times, false);

  for (std::size_t sidx = 0; sidx < traj.times.size(); ++sidx) {
    const double t = traj.times[sidx];
    const Vector& r = traj.r_star[sidx];
    mon.max_oracle_grad_norm =
        std::max(mon.max_oracle_grad_norm, global_grad(costs, r, t).norm());
    if (p.quadratic_oracle)
      mon.max_oracle_route_gap = std::max(
          mon.max_oracle_route_gap, (r - newton_check[sidx]).norm());

    Vector mean = Vector::Zero(m);
    for (const auto& xi : traj.x[sidx]) mean += xi;
    mean /= static_cast<double>(n);

    std::vector<double> errs(n);
    double cons_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      errs[i] = (traj.x[sidx][i] - r).norm();
      cons_sq += (traj.x[sidx][i] - mean).squaredNorm();
    }
    traj.tracking_error.push_back(std::move(errs));
    traj.consensus_error.push_back(std::sqrt(cons_sq));
    traj.average_error.push_back((mean - r).norm());
  }
  return traj;
}

/// Scalar summary of a run, suitable for acceptance checks and CSV export.
struct Metrics {
  double terminal_tracking_error = 0.0;  // max over agents at the last sample
  double max_consensus_error_after_half = 0.0;
  double estimator_settle_time = 0.0;
  double max_xi_sum_inf = 0.0;
  double min_zhat_eig = 0.0;
  double max_z_asymmetry = 0.0;
  double min_beta = 0.0;
  double max_alpha_decrease = 0.0;
  double max_state_norm = 0.0;
  double max_lemma1_ratio = 0.0;
  double max_oracle_grad_norm = 0.0;
  double max_oracle_route_gap = 0.0;
  double final_estimator_error = 0.0;
};

inline Metrics metrics(const Trajectory& traj) {
  Metrics out;
  if (!traj.times.empty()) {
    const auto& last = traj.tracking_error.back();
    for (double e : last)
      out.terminal_tracking_error = std::max(out.terminal_tracking_error, e);
    const double t_half = traj.times.back() / 2.0;
    for (std::size_t s = 0; s < traj.times.size(); ++s)
      if (traj.times[s] >= t_half)
        out.max_consensus_error_after_half =
            std::max(out.max_consensus_error_after_half, traj.consensus_error[s]);
  }
  out.estimator_settle_time = traj.monitors.estimator_settle_time;
  out.max_xi_sum_inf = traj.monitors.max_xi_sum_inf;
  out.min_zhat_eig = traj.monitors.min_zhat_eig;
  out.max_z_asymmetry = traj.monitors.max_z_asymmetry;
  out.min_beta = traj.monitors.min_beta;
  out.max_alpha_decrease = traj.monitors.max_alpha_decrease;
  out.max_state_norm = traj.monitors.max_state_norm;
  out.max_lemma1_ratio = traj.monitors.max_lemma1_ratio;
  out.max_oracle_grad_norm = traj.monitors.max_oracle_grad_norm;
  out.max_oracle_route_gap = traj.monitors.max_oracle_route_gap;
  out.final_estimator_error = traj.monitors.final_estimator_error;
  return out;
}

}  // namespace dato
