#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dato/config.hpp"
#include "dato/estimator.hpp"
#include "dato/example_costs.hpp"
#include "dato/graph.hpp"
#include "dato/sim.hpp"

namespace dato {

struct ValidationResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline Graph random_graph(std::mt19937_64& rng, int max_nodes) {
  const int n = 2 + static_cast<int>(rng() % (max_nodes - 1));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform_from(rng, 0.0, 1.0) < 0.35) edges.emplace_back(i, j);
  return Graph(n, edges, /*require_connected=*/false);
}

inline ValidationResult check(const std::string& name, bool pass,
                              const std::string& detail) {
  return {name, pass, detail};
}

}  // namespace detail

/// L = D D' and L 1 = 0 on random graphs.
inline ValidationResult validate_graph_identities(int trials = 100) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Graph g = detail::random_graph(rng, 12);
    const DenseMatrix l = g.laplacian();
    const DenseMatrix d = g.incidence();
    worst = std::max(worst,
                     (l - d * d.transpose()).cwiseAbs().maxCoeff());
    worst = std::max(
        worst, (l * DenseMatrix::Ones(g.num_nodes(), 1)).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "max |L - DD'| and |L 1| deviation = " << worst;
  return detail::check("graph-laplacian-identities", worst < 1e-12, os.str());
}

/// Spectral connectivity test agrees with BFS reachability.
inline ValidationResult validate_connectivity_agreement(int trials = 100) {
  std::mt19937_64 rng(77);
  int mismatches = 0;
  for (int t = 0; t < trials; ++t) {
    const Graph g = detail::random_graph(rng, 12);
    const bool spectral = g.algebraic_connectivity() > 1e-9;
    if (spectral != g.is_connected()) ++mismatches;
  }
  return detail::check("graph-connectivity-spectral-vs-bfs", mismatches == 0,
                       std::to_string(mismatches) + " mismatches in " +
                           std::to_string(trials) + " graphs");
}

/// Central-difference consistency of every model in a cost set.
inline ValidationResult validate_cost_derivatives(
    const std::string& label, const std::vector<CostPtr>& costs,
    double t_max, double x_range, int samples_per_model = 100,
    const std::vector<double>& skip_times = {}) {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (const auto& c : costs) {
    const int m = c->dim();
    for (int s = 0; s < samples_per_model; ++s) {
      Vector x(m);
      for (int d = 0; d < m; ++d)
        x(d) = detail::uniform_from(rng, -x_range, x_range);
      double t = detail::uniform_from(rng, 0.1, t_max);
      // stay clear of fade cutoffs, where the time derivative genuinely jumps
      for (double cut : skip_times)
        if (std::abs(t - cut) < 0.05) t += 0.1;
      worst = std::max(worst, fd_check(*c, x, t, 1e-5).max_error());
    }
  }
  std::ostringstream os;
  os << "max fd error = " << worst << " over " << costs.size() << " models";
  return detail::check("cost-derivatives-" + label, worst < 1e-5, os.str());
}

/// Dead-zone floor against an adversarial sequence that sweeps eigenvalues
/// through zero and mixes in rotations and near-singular plateaus.
inline ValidationResult validate_dza_floor(double h0 = 0.3) {
  const int m = 3;
  Matrix hold = h0 * Matrix::Identity(m, m);
  double floor = h0;
  double min_seen = std::numeric_limits<double>::infinity();
  bool hold_respected = true;
  Matrix last_safe = hold;
  std::mt19937_64 rng(5);
  for (int k = 0; k <= 4000; ++k) {
    const double t = k * 1e-3;
    // eigenvalues sweep through zero at different rates
    Vector lam(m);
    lam << std::sin(3.0 * t), 2.0 * std::cos(t), 0.5 * std::sin(7.0 * t + 0.4);
    const double c = std::cos(0.3 * t), s = std::sin(0.3 * t);
    Matrix rot(m, m);
    rot << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    const Matrix z = rot * lam.asDiagonal() * rot.transpose();
    auto [zhat, lam0] = dza(z, hold, floor, h0, k == 0);
    const double recomputed = min_abs_eig(zhat);
    min_seen = std::min(min_seen, std::min(lam0, recomputed));
    // when z is unsafe the output must equal the last safe sample
    if (min_abs_eig(0.5 * (z + z.transpose())) < h0) {
      if ((zhat - last_safe).cwiseAbs().maxCoeff() != 0.0) hold_respected = false;
    } else if (k > 0) {
      last_safe = zhat;
    }
  }
  std::ostringstream os;
  os << "min |lambda(zhat)| = " << min_seen << " (h0 = " << h0
     << "), hold logic " << (hold_respected ? "exact" : "violated");
  return detail::check("dza-floor-adversarial",
                       min_seen >= h0 && hold_respected, os.str());
}

/// Short closed-loop run: xi-sum conservation and symmetry preservation.
/// An optional xi0 injection lets negative tests set a nonzero-sum start.
inline ValidationResult validate_estimator_conservation(
    std::vector<Matrix> xi0 = {}) {
  auto setup = example2_costs();
  SimParams p;
  p.estimator_mode = EstimatorMode::fixed_gain;
  p.omega = 1.0;
  p.k = 20.0;
  p.h0 = 0.1;
  p.dt = 1e-3;
  p.t_final = 5.0;
  p.record_stride = 100;
  p.quadratic_oracle = true;
  p.xi0 = std::move(xi0);
  for (int i = 0; i < 6; ++i)
    p.x0.push_back(setup.initial_states[i] - setup.offsets[i]);
  const Graph g = Graph::ring(6);
  const auto traj = run(g, setup.costs.models, setup.costs.assumptions, p);
  std::ostringstream os;
  os << "max |sum xi| = " << traj.monitors.max_xi_sum_inf
     << ", max asymmetry = " << traj.monitors.max_z_asymmetry;
  return detail::check("estimator-conservation",
                       traj.monitors.max_xi_sum_inf < 1e-6 &&
                           traj.monitors.max_z_asymmetry < 1e-9,
                       os.str());
}

/// Gain selection rules and the adaptive-gain run invariants.
inline ValidationResult validate_gain_laws() {
  bool ok = true;
  std::ostringstream os;

  ok &= std::abs(select_h0(24.0, 20, 0.4) - 0.48) < 1e-15;
  CostAssumptions a;
  a.h1 = 1.0;
  a.h2 = 1.0;
  ok &= std::abs(select_k(a, 6, 2, 0.5, false) - (6.0 * std::sqrt(2.0) + 0.5)) <
        1e-12;
  ok &= std::abs(state_gain(6, 2.0, 4.0, 0.1) - 15.1) < 1e-12;

  auto setup = example2_costs();
  SimParams p;
  p.estimator_mode = EstimatorMode::fixed_gain;
  p.omega = 1.0;
  p.k = 20.0;
  p.h0 = 0.1;
  p.dt = 1e-3;
  p.t_final = 5.0;
  p.record_stride = 100;
  p.quadratic_oracle = true;
  for (int i = 0; i < 6; ++i)
    p.x0.push_back(setup.initial_states[i] - setup.offsets[i]);
  const Graph g = Graph::ring(6);
  const auto traj = run(g, setup.costs.models, setup.costs.assumptions, p);
  ok &= traj.monitors.max_alpha_decrease <= 1e-12;
  ok &= traj.monitors.min_beta >= 0.0;
  ok &= traj.beta.front().front() == 2.0;  // m eps1 / eps2 with m=2, eps=1

  os << "formula spot checks + run invariants (min beta = "
     << traj.monitors.min_beta << ", max alpha decrease = "
     << traj.monitors.max_alpha_decrease << ")";
  return detail::check("adaptive-gain-laws", ok, os.str());
}

/// Full invariant suite; prints one pass/fail line per property.
inline std::vector<ValidationResult> validate_all(std::ostream& out) {
  const auto ex1 = example1_costs();
  const auto ex2 = example2_costs();
  std::vector<double> cutoffs;
  for (double c : ex2.fade_cutoffs)
    if (std::isfinite(c)) cutoffs.push_back(c);

  std::vector<ValidationResult> results;
  results.push_back(validate_graph_identities());
  results.push_back(validate_connectivity_agreement());
  results.push_back(
      validate_cost_derivatives("example1", ex1.models, 60.0, 5.0));
  results.push_back(validate_cost_derivatives("example2", ex2.costs.models,
                                              140.0, 50.0, 100, cutoffs));
  results.push_back(validate_dza_floor());
  results.push_back(validate_estimator_conservation());
  results.push_back(validate_gain_laws());

  for (const auto& r : results)
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " - " << r.detail
        << '\n';
  return results;
}

}  // namespace dato
