// Command-line driver: runs the built-in experiments, the invariant
// validation suite, and parameter sweeps.
//
// Exit codes: 0 ok, 1 validation failure, 2 configuration error, 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dato/experiment.hpp"
#include "dato/validate.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw dato::config_error("--set expects key=value, got '" + item + "'");
    out.push_back({item.substr(0, eq), item.substr(eq + 1)});
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed adaptive time-varying optimization simulator"};
  app.require_subcommand(1);

  std::string run_name, sweep_name, sweep_param, sweep_values;
  std::vector<std::string> run_sets, sweep_sets;
  std::string run_out = "out", sweep_out = "out";
  std::string run_config, sweep_config;
  int jobs = 1;

  auto* run_cmd = app.add_subcommand("run", "Run a named experiment");
  run_cmd->add_option("name", run_name, "example1 | example2 | custom")->required();
  run_cmd->add_option("--set", run_sets, "Config override key=value (repeatable)");
  run_cmd->add_option("--out", run_out, "Output directory");
  run_cmd->add_option("--config", run_config, "JSON config file (required for 'custom')");

  auto* validate_cmd =
      app.add_subcommand("validate", "Run the invariant validation suite");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep_cmd->add_option("name", sweep_name, "experiment name")->required();
  sweep_cmd->add_option("--param", sweep_param, "config key to sweep")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep_cmd->add_option("--set", sweep_sets, "extra overrides key=value");
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs");
  sweep_cmd->add_option("--config", sweep_config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      dato::ExperimentSpec spec;
      spec.name = run_name;
      spec.overrides = parse_overrides(run_sets);
      spec.out_dir = std::filesystem::path(run_out) / run_name;
      if (!run_config.empty()) spec.config_file = run_config;
      dato::run_experiment(spec, std::cout);
      return 0;
    }
    if (validate_cmd->parsed()) {
      const auto results = dato::validate_all(std::cout);
      for (const auto& r : results)
        if (!r.pass) return 1;
      return 0;
    }
    if (sweep_cmd->parsed()) {
      dato::ExperimentSpec spec;
      spec.name = sweep_name;
      spec.overrides = parse_overrides(sweep_sets);
      spec.out_dir = sweep_out;
      if (!sweep_config.empty()) spec.config_file = sweep_config;
      dato::sweep(spec, sweep_param, split_csv(sweep_values), jobs, std::cout);
      return 0;
    }
  } catch (const dato::io_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const dato::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
