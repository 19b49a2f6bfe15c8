#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dato/config.hpp"
#include "dato/sim.hpp"

namespace dato {

struct ExperimentSpec {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config_file;
};

namespace detail {

// Fixed-format float printing keeps the CSV byte-stable for identical runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

inline json resolve_config(const ExperimentSpec& spec) {
  json cfg;
  if (spec.config_file) {
    std::ifstream in(*spec.config_file);
    if (!in) throw io_error("cannot read config file '" + spec.config_file->string() + "'");
    cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded())
      throw config_error("config file '" + spec.config_file->string() + "' is not valid JSON");
  } else {
    cfg = default_config(spec.name);
  }
  for (const auto& [k, v] : spec.overrides) apply_override(cfg, k, v);
  return cfg;
}

inline json metrics_to_json(const Metrics& m) {
  return json{{"terminal_tracking_error", m.terminal_tracking_error},
              {"max_consensus_error_after_half", m.max_consensus_error_after_half},
              {"estimator_settle_time", m.estimator_settle_time},
              {"final_estimator_error", m.final_estimator_error},
              {"max_xi_sum_inf", m.max_xi_sum_inf},
              {"min_zhat_eig", m.min_zhat_eig},
              {"max_z_asymmetry", m.max_z_asymmetry},
              {"min_beta", m.min_beta},
              {"max_alpha_decrease", m.max_alpha_decrease},
              {"max_state_norm", m.max_state_norm},
              {"max_lemma1_ratio", m.max_lemma1_ratio},
              {"max_oracle_grad_norm", m.max_oracle_grad_norm},
              {"max_oracle_route_gap", m.max_oracle_route_gap}};
}

/// Writes trajectory CSV, metrics JSON and plot-ready .dat files for one run.
/// Positions are reported in the world frame (formation offsets added back
/// when the experiment uses them); tracking errors are |x_i - tau_i - r*|.
inline void write_outputs(const Trajectory& traj, const Metrics& met,
                          const std::vector<Vector>& offsets,
                          const json& config,
                          const std::vector<std::string>& warnings,
                          const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir.string() + "'");

  const int n = traj.n, m = traj.m;
  auto world = [&](std::size_t s, int i) {
    Vector x = traj.x[s][i];
    if (!offsets.empty()) x += offsets[i];
    return x;
  };

  {
    auto out = detail::open_out(dir / "traj.csv");
    out << "t";
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m; ++d) out << ",x" << i + 1 << "_" << d + 1;
    for (int d = 0; d < m; ++d) out << ",rstar_" << d + 1;
    for (int i = 0; i < n; ++i) out << ",err" << i + 1;
    out << ",consensus_err,average_err,estimator_err,min_zhat_eig\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      out << detail::fmt(traj.times[s]);
      for (int i = 0; i < n; ++i) {
        const Vector x = world(s, i);
        for (int d = 0; d < m; ++d) out << ',' << detail::fmt(x(d));
      }
      for (int d = 0; d < m; ++d) out << ',' << detail::fmt(traj.r_star[s](d));
      for (int i = 0; i < n; ++i)
        out << ',' << detail::fmt(traj.tracking_error[s][i]);
      out << ',' << detail::fmt(traj.consensus_error[s]) << ','
          << detail::fmt(traj.average_error[s]) << ','
          << detail::fmt(traj.estimator_error[s]) << ','
          << detail::fmt(traj.min_zhat_eig[s]) << '\n';
    }
  }

  {
    auto out = detail::open_out(dir / "tracking_error.dat");
    out << "# t";
    for (int i = 0; i < n; ++i) out << " err" << i + 1;
    out << '\n';
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      out << detail::fmt(traj.times[s]);
      for (int i = 0; i < n; ++i)
        out << ' ' << detail::fmt(traj.tracking_error[s][i]);
      out << '\n';
    }
  }

  if (m == 2) {
    auto out = detail::open_out(dir / "plane_paths.dat");
    out << "# t";
    for (int i = 0; i < n; ++i) out << " x" << i + 1 << " y" << i + 1;
    out << " rstar_x rstar_y\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      out << detail::fmt(traj.times[s]);
      for (int i = 0; i < n; ++i) {
        const Vector x = world(s, i);
        out << ' ' << detail::fmt(x(0)) << ' ' << detail::fmt(x(1));
      }
      out << ' ' << detail::fmt(traj.r_star[s](0)) << ' '
          << detail::fmt(traj.r_star[s](1)) << '\n';
    }
  }

  {
    json doc = {{"metrics", metrics_to_json(met)},
                {"config", config},
                {"warnings", warnings},
                {"samples", traj.times.size()}};
    auto out = detail::open_out(dir / "metrics.json");
    out << doc.dump(2) << '\n';
  }
}

struct ExperimentResult {
  Trajectory trajectory;
  Metrics summary;
};

/// Builds, runs and exports one experiment. Returns the in-memory result for
/// callers that want to inspect it further.
inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       std::ostream& log) {
  const json cfg = resolve_config(spec);
  ExperimentBuild build = build_experiment(cfg);
  for (const auto& w : build.warnings) log << "warning: " << w << '\n';

  Trajectory traj = run(build.graph, build.costs, build.assumptions, build.params);
  Metrics met = metrics(traj);
  write_outputs(traj, met, build.output_offsets, cfg, build.warnings,
                spec.out_dir);
  log << "wrote " << spec.out_dir.string() << " (" << traj.times.size()
      << " samples, terminal tracking error "
      << detail::fmt(met.terminal_tracking_error) << ")\n";
  return {std::move(traj), met};
}

/// Runs the named experiment once per parameter value; results land in
/// out/<name>_<param>_<value>/ plus a combined sweep_summary.csv. Values
/// run concurrently when jobs > 1 (each worker builds its own cost set).
inline void sweep(const ExperimentSpec& base, const std::string& param,
                  const std::vector<std::string>& values, int jobs,
                  std::ostream& log) {
  if (values.empty()) throw config_error("sweep: no values given");
  if (jobs < 1) jobs = 1;

  struct Row {
    std::string value;
    Metrics met;
    std::string error;
  };
  std::vector<Row> rows(values.size());

  auto work = [&](std::size_t idx) {
    ExperimentSpec spec = base;
    spec.overrides.push_back({param, values[idx]});
    std::string tag = values[idx];
    for (auto& ch : tag)
      if (ch == '.' || ch == '/' || ch == '=') ch = 'p';
    spec.out_dir = base.out_dir / (base.name + "_" + param + "_" + tag);
    rows[idx].value = values[idx];
    try {
      std::ostringstream sink;
      rows[idx].met = run_experiment(spec, sink).summary;
    } catch (const std::exception& e) {
      rows[idx].error = e.what();
    }
  };

  std::size_t next = 0;
  while (next < values.size()) {
    const std::size_t batch =
        std::min<std::size_t>(jobs, values.size() - next);
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b < batch; ++b) pool.emplace_back(work, next + b);
    for (auto& th : pool) th.join();
    next += batch;
  }

  std::error_code ec;
  std::filesystem::create_directories(base.out_dir, ec);
  auto out = detail::open_out(base.out_dir / "sweep_summary.csv");
  out << param
      << ",terminal_tracking_error,max_consensus_error_after_half,"
         "estimator_settle_time,min_zhat_eig,max_xi_sum_inf,status\n";
  bool any_failed = false;
  for (const auto& r : rows) {
    if (r.error.empty()) {
      out << r.value << ',' << detail::fmt(r.met.terminal_tracking_error)
          << ',' << detail::fmt(r.met.max_consensus_error_after_half) << ','
          << detail::fmt(r.met.estimator_settle_time) << ','
          << detail::fmt(r.met.min_zhat_eig) << ','
          << detail::fmt(r.met.max_xi_sum_inf) << ",ok\n";
    } else {
      out << r.value << ",,,,,," << "failed\n";
      log << "sweep " << param << "=" << r.value << " failed: " << r.error
          << '\n';
      any_failed = true;
    }
  }
  log << "wrote " << (base.out_dir / "sweep_summary.csv").string() << '\n';
  if (any_failed) throw config_error("sweep: one or more runs failed");
}

}  // namespace dato
