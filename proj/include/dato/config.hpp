#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dato/common.hpp"
#include "dato/example_costs.hpp"
#include "dato/graph.hpp"
#include "dato/sim.hpp"

namespace dato {

using json = nlohmann::json;

/// Everything needed to run one experiment, assembled from a config object.
struct ExperimentBuild {
  Graph graph;
  std::vector<CostPtr> costs;
  CostAssumptions assumptions;
  SimParams params;
  std::vector<Vector> output_offsets;  // tau_i; empty when no formation shift
  bool quadratic = false;
  std::vector<std::string> warnings;
  std::string name;
};

namespace detail {

inline const json& require(const json& j, const std::string& key,
                           const std::string& where) {
  if (!j.contains(key))
    throw config_error("config: missing key '" + key + "' in " + where);
  return j.at(key);
}

inline double as_number(const json& j, const std::string& what) {
  if (!j.is_number())
    throw config_error("config: '" + what + "' must be a number");
  return j.get<double>();
}

inline Matrix parse_matrix(const json& j, int m, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw config_error("config: '" + what + "' must be a " +
                       std::to_string(m) + "x" + std::to_string(m) +
                       " row array");
  Matrix out(m, m);
  for (int r = 0; r < m; ++r) {
    const auto& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw config_error("config: bad row in '" + what + "'");
    for (int c = 0; c < m; ++c)
      out(r, c) = as_number(row.at(c), what);
  }
  return out;
}

inline Vector parse_vector(const json& j, int m, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw config_error("config: '" + what + "' must be a length-" +
                       std::to_string(m) + " array");
  Vector out(m);
  for (int i = 0; i < m; ++i) out(i) = as_number(j.at(i), what);
  return out;
}

// Coefficient table for one time-varying term set:
// value(t) = const + lin t + sin_coef sin(sin_omega t) + cos_coef cos(cos_omega t)
template <class T>
struct TimePolynomial {
  T constant, linear, sin_coef, cos_coef;
  double sin_omega = 1.0, cos_omega = 1.0;

  T at(double t) const {
    return constant + linear * t + sin_coef * std::sin(sin_omega * t) +
           cos_coef * std::cos(cos_omega * t);
  }
  T rate(double t) const {
    return linear + sin_coef * (sin_omega * std::cos(sin_omega * t)) -
           cos_coef * (cos_omega * std::sin(cos_omega * t));
  }
};

template <class T, class Parse>
TimePolynomial<T> parse_terms(const json& j, const T& zero, Parse parse,
                              const std::string& what) {
  TimePolynomial<T> p{zero, zero, zero, zero};
  if (j.is_null()) return p;
  if (j.contains("const")) p.constant = parse(j.at("const"), what + ".const");
  if (j.contains("lin")) p.linear = parse(j.at("lin"), what + ".lin");
  if (j.contains("sin")) {
    p.sin_coef = parse(require(j.at("sin"), "coef", what + ".sin"),
                       what + ".sin.coef");
    if (j.at("sin").contains("omega"))
      p.sin_omega = as_number(j.at("sin").at("omega"), what + ".sin.omega");
  }
  if (j.contains("cos")) {
    p.cos_coef = parse(require(j.at("cos"), "coef", what + ".cos"),
                       what + ".cos.coef");
    if (j.at("cos").contains("omega"))
      p.cos_omega = as_number(j.at("cos").at("omega"), what + ".cos.omega");
  }
  return p;
}

inline CostPtr parse_custom_agent(const json& j, int m, int index) {
  const std::string where = "costs.agents[" + std::to_string(index) + "]";
  auto pm = [m](const json& jj, const std::string& w) {
    return parse_matrix(jj, m, w);
  };
  auto pv = [m](const json& jj, const std::string& w) {
    return parse_vector(jj, m, w);
  };
  auto h = parse_terms<Matrix>(j.value("H", json()), Matrix::Zero(m, m), pm,
                               where + ".H");
  auto r = parse_terms<Vector>(j.value("R", json()), Vector::Zero(m), pv,
                               where + ".R");
  double d_const = 0.0;
  if (j.contains("d")) d_const = as_number(j.at("d"), where + ".d");
  return std::make_shared<QuadraticCost>(
      m, [h](double t) { return h.at(t); }, [h](double t) { return h.rate(t); },
      [r](double t) { return r.at(t); }, [r](double t) { return r.rate(t); },
      [d_const](double) { return d_const; });
}

// Deterministic uniform double in [lo, hi) from the raw generator stream
// (avoids the implementation-defined std distributions).
inline double uniform_from(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

}  // namespace detail

inline Graph build_graph(const json& g) {
  const std::string type = detail::require(g, "type", "graph").get<std::string>();
  if (type == "ring")
    return Graph::ring(detail::require(g, "n", "graph").get<int>());
  if (type == "complete")
    return Graph::complete(detail::require(g, "n", "graph").get<int>());
  if (type == "edges") {
    const int n = detail::require(g, "n", "graph").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : detail::require(g, "edges", "graph")) {
      if (!e.is_array() || e.size() != 2)
        throw config_error("config: graph.edges entries must be pairs");
      edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    return Graph(n, edges);
  }
  throw config_error("config: unknown graph.type '" + type + "'");
}

/// Builds the runnable experiment from a config object. Throws config_error
/// on any malformed or inadmissible input.
inline ExperimentBuild build_experiment(const json& cfg) {
  const json& graph_j = detail::require(cfg, "graph", "config");
  const json& costs_j = detail::require(cfg, "costs", "config");
  const json& est_j = detail::require(cfg, "estimator", "config");
  const json& opt_j = detail::require(cfg, "optimizer", "config");
  const json& sim_j = detail::require(cfg, "sim", "config");

  Graph graph = build_graph(graph_j);
  const int n = graph.num_nodes();

  // Cost set
  std::vector<CostPtr> costs;
  CostAssumptions assumptions;
  std::vector<Vector> offsets;
  std::vector<Vector> paper_x0;
  bool quadratic = false;
  const std::string set =
      detail::require(costs_j, "set", "costs").get<std::string>();
  if (set == "example1") {
    auto cs = example1_costs();
    costs = std::move(cs.models);
    assumptions = cs.assumptions;
    quadratic = cs.quadratic;
  } else if (set == "example2") {
    auto setup = example2_costs(costs_j.value("fade_time_constant", 2.0));
    costs = std::move(setup.costs.models);
    assumptions = setup.costs.assumptions;
    quadratic = setup.costs.quadratic;
    offsets = std::move(setup.offsets);
    paper_x0 = std::move(setup.initial_states);
  } else if (set == "quadratic_custom") {
    const int m = detail::require(costs_j, "m", "costs").get<int>();
    if (m < 1 || m > kMaxDim)
      throw config_error("config: costs.m must be in [1, " +
                         std::to_string(kMaxDim) + "]");
    const json& agents = detail::require(costs_j, "agents", "costs");
    for (int i = 0; i < static_cast<int>(agents.size()); ++i)
      costs.push_back(detail::parse_custom_agent(agents.at(i), m, i));
    const json& a = detail::require(costs_j, "assumptions", "costs");
    assumptions.h1 = detail::as_number(
        detail::require(a, "h1", "costs.assumptions"), "h1");
    assumptions.h2 = detail::as_number(
        detail::require(a, "h2", "costs.assumptions"), "h2");
    if (a.contains("mu4"))
      assumptions.mu4 = detail::as_number(a.at("mu4"), "mu4");
    quadratic = true;
  } else {
    throw config_error("config: unknown cost set '" + set + "'");
  }
  if (static_cast<int>(costs.size()) != n)
    throw config_error("config: cost set has " + std::to_string(costs.size()) +
                       " models but the graph has " + std::to_string(n) +
                       " nodes");
  const int m = costs.front()->dim();

  SimParams p;
  p.quadratic_oracle = quadratic;

  // Estimator
  const std::string mode =
      detail::require(est_j, "mode", "estimator").get<std::string>();
  if (mode == "fixed") {
    p.estimator_mode = EstimatorMode::fixed_gain;
    p.omega = detail::as_number(detail::require(est_j, "omega", "estimator"),
                                "estimator.omega");
  } else if (mode == "state") {
    p.estimator_mode = EstimatorMode::state_gain;
    p.state_gain_margin = est_j.value("margin", 0.1);
  } else {
    throw config_error("config: estimator.mode must be 'fixed' or 'state'");
  }

  // Optimizer gains
  p.eps1 = opt_j.value("eps1", 1.0);
  p.eps2 = opt_j.value("eps2", 1.0);
  p.alpha0 = opt_j.value("alpha0", 0.0);
  const bool use_formula = opt_j.value("use_gain_formula", false);
  const bool general = p.estimator_mode == EstimatorMode::state_gain;
  if (use_formula) {
    const double gamma = opt_j.value("gamma", 0.5);
    const double eps_margin = opt_j.value("eps_margin", 1.0);
    p.h0 = select_h0(assumptions.h1, n, gamma);
    p.k = select_k(assumptions, n, m, eps_margin, general);
  } else {
    p.k = detail::as_number(detail::require(opt_j, "k", "optimizer"),
                            "optimizer.k");
    p.h0 = detail::as_number(detail::require(opt_j, "h0", "optimizer"),
                             "optimizer.h0");
  }

  // Integration
  p.dt = detail::as_number(detail::require(sim_j, "dt", "sim"), "sim.dt");
  p.t_final = detail::as_number(detail::require(sim_j, "t_final", "sim"),
                                "sim.t_final");
  p.record_stride = sim_j.value("record_stride", 100);
  const std::string scheme = sim_j.value("integrator", std::string("euler"));
  if (scheme == "euler")
    p.scheme = IntegratorScheme::euler;
  else if (scheme == "rk4")
    p.scheme = IntegratorScheme::rk4;
  else
    throw config_error("config: sim.integrator must be 'euler' or 'rk4'");

  // Initial states. "paper" uses the cost set's published initial positions
  // (world frame, shifted into the formation-reference frame here).
  const json x0 = sim_j.value("x0", json("paper"));
  const auto seed = sim_j.value("seed", std::uint64_t{0});
  if (x0.is_string() && x0.get<std::string>() == "paper") {
    if (paper_x0.empty())
      throw config_error("config: sim.x0 = 'paper' is only available for example2");
    for (int i = 0; i < n; ++i) p.x0.push_back(paper_x0[i] - offsets[i]);
  } else if (x0.is_object()) {
    const std::string type =
        detail::require(x0, "type", "sim.x0").get<std::string>();
    std::mt19937_64 rng(seed);
    if (type == "uniform") {
      const double lo = x0.value("low", -5.0), hi = x0.value("high", 5.0);
      for (int i = 0; i < n; ++i) {
        Vector v(m);
        for (int d = 0; d < m; ++d) v(d) = detail::uniform_from(rng, lo, hi);
        p.x0.push_back(v);
      }
    } else if (type == "colocated") {
      // All agents at one point of the given norm; direction from the seed.
      const double radius = x0.value("radius", 1.0);
      Vector v(m);
      for (int d = 0; d < m; ++d) v(d) = detail::uniform_from(rng, -1.0, 1.0);
      if (v.norm() == 0.0) v.setOnes();
      v *= radius / v.norm();
      p.x0.assign(n, v);
    } else {
      throw config_error("config: unknown sim.x0.type '" + type + "'");
    }
  } else if (x0.is_array()) {
    for (const auto& row : x0)
      p.x0.push_back(detail::parse_vector(row, m, "sim.x0"));
  } else {
    throw config_error("config: sim.x0 must be 'paper', an object, or an array");
  }

  ExperimentBuild build{std::move(graph), std::move(costs), assumptions,
                        std::move(p),     std::move(offsets), quadratic,
                        {},               ""};
  build.warnings =
      validate_sim(build.graph, build.costs, build.assumptions, build.params);
  return build;
}

/// Built-in experiment configurations. "example1" and "example2" reproduce
/// the two published benchmarks; "custom" requires a user config file.
inline json default_config(const std::string& name) {
  if (name == "example1") {
    return json{
        {"graph", {{"type", "ring"}, {"n", 20}}},
        {"costs", {{"set", "example1"}}},
        {"estimator", {{"mode", "state"}, {"margin", 5.0}}},
        {"optimizer",
         {{"k", 35.0},
          {"h0", 0.5},
          {"eps1", 1.0},
          {"eps2", 1.0},
          {"alpha0", 25000.0},
          {"use_gain_formula", false}}},
        {"sim",
         {{"dt", 1.8e-5},
          {"t_final", 60.0},
          {"record_stride", 5000},
          {"seed", 1},
          {"integrator", "euler"},
          {"x0", {{"type", "uniform"}, {"low", -5.0}, {"high", 5.0}}}}}};
  }
  if (name == "example2") {
    return json{
        {"graph", {{"type", "ring"}, {"n", 6}}},
        {"costs", {{"set", "example2"}, {"fade_time_constant", 2.0}}},
        {"estimator", {{"mode", "fixed"}, {"omega", 1.0}}},
        {"optimizer",
         {{"k", 20.0},
          {"h0", 0.1},
          {"eps1", 1.0},
          {"eps2", 1.0},
          {"alpha0", 0.0},
          {"use_gain_formula", false}}},
        {"sim",
         {{"dt", 1e-3},
          {"t_final", 140.0},
          {"record_stride", 100},
          {"seed", 1},
          {"integrator", "euler"},
          {"x0", "paper"}}}};
  }
  if (name == "custom") {
    throw config_error("experiment 'custom' requires --config FILE");
  }
  throw config_error("unknown experiment '" + name +
                     "' (expected example1, example2 or custom)");
}

/// Applies one `--set key=value` override onto a config object. Keys are
/// dotted JSON paths; common scalar keys may omit the section prefix.
inline void apply_override(json& cfg, const std::string& key,
                           const std::string& value) {
  static const std::map<std::string, std::string> aliases = {
      {"dt", "sim.dt"},
      {"t_final", "sim.t_final"},
      {"record_stride", "sim.record_stride"},
      {"seed", "sim.seed"},
      {"integrator", "sim.integrator"},
      {"x0", "sim.x0"},
      {"k", "optimizer.k"},
      {"h0", "optimizer.h0"},
      {"gamma", "optimizer.gamma"},
      {"eps1", "optimizer.eps1"},
      {"eps2", "optimizer.eps2"},
      {"eps_margin", "optimizer.eps_margin"},
      {"alpha0", "optimizer.alpha0"},
      {"use_gain_formula", "optimizer.use_gain_formula"},
      {"omega", "estimator.omega"},
      {"margin", "estimator.margin"},
      {"mode", "estimator.mode"},
      {"fade_time_constant", "costs.fade_time_constant"},
      {"n", "graph.n"}};
  std::string path = key;
  if (auto it = aliases.find(key); it != aliases.end()) path = it->second;

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot - start);
    if (part.empty()) throw config_error("override: empty path segment in '" + key + "'");
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace dato
