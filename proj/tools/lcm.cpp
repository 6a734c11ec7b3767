// Command-line front end: solve-dp, train-rl, simulate, compare, report.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcm/binary_io.hpp"
#include "lcm/config.hpp"
#include "lcm/metrics.hpp"
#include "lcm/rl_solver.hpp"
#include "lcm/scenario.hpp"

namespace {

struct ScenarioArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string preset = "desk";
  bool dump_trajectories = false;
  bool verbose = false;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& a) {
  cmd->add_option("-c,--config", a.config, "scenario JSON (defaults when omitted)");
  cmd->add_option("-o,--out", a.out, "output directory")->required();
  cmd->add_option("--seed", a.seed, "override simulation and training seeds");
  cmd->add_option("--preset", a.preset, "scale preset")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_flag("--dump-trajectories", a.dump_trajectories, "write trajectories.csv for the first run");
  cmd->add_flag("-v,--verbose", a.verbose, "progress on stderr");
}

lcm::ScenarioConfig resolve(const ScenarioArgs& a) {
  const lcm::Preset preset = a.preset == "full" ? lcm::Preset::Full : lcm::Preset::Desk;
  lcm::ScenarioConfig cfg = a.config.empty() ? lcm::default_config(preset) : lcm::load_config(a.config, preset);
  if (a.seed) {
    cfg.simulation.seed = *a.seed;
    cfg.train.seed = *a.seed;
  }
  lcm::validate(cfg);
  return cfg;
}

int run(const ScenarioArgs& a, lcm::Solver solver, bool reuse) {
  const lcm::ScenarioConfig cfg = resolve(a);
  lcm::RunOptions opt;
  opt.out_dir = a.out;
  opt.dump_trajectories = a.dump_trajectories;
  opt.reuse_artifacts = reuse;
  opt.quiet = !a.verbose;
  const auto outcome = lcm::run_scenario(cfg, solver, opt);
  std::cout << lcm::report_run(a.out);
  (void)outcome;
  return 0;
}

int fail(const std::string& kind, const std::string& message, const std::string& key = {}) {
  nlohmann::json err = {{"error", kind}, {"message", message}};
  if (!key.empty()) err["key"] = key;
  std::cerr << err.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Life-cycle labor supply model: DP and actor-critic solvers, simulation and reform comparison"};
  app.require_subcommand(1);

  ScenarioArgs dp_args, rl_args, sim_args;
  auto* solve_dp = app.add_subcommand("solve-dp", "solve by backward induction, simulate and report");
  add_scenario_flags(solve_dp, dp_args);
  auto* train_rl = app.add_subcommand("train-rl", "train the actor-critic, simulate and report");
  add_scenario_flags(train_rl, rl_args);
  auto* simulate = app.add_subcommand("simulate", "simulate with existing solver artifacts in --out");
  add_scenario_flags(simulate, sim_args);
  std::string solver_name = "dp";
  simulate->add_option("--solver", solver_name, "policy source")->check(CLI::IsMember({"dp", "rl", "random"}));

  std::string run_a, run_b, compare_out;
  auto* compare = app.add_subcommand("compare", "compare two run directories (run_a is the reference)");
  compare->add_option("run_a", run_a)->required();
  compare->add_option("run_b", run_b)->required();
  compare->add_option("-o,--out", compare_out, "output directory (default: run_b/compare)");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "print the summary of a run directory");
  report->add_option("run_dir", report_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    if (*solve_dp) return run(dp_args, lcm::Solver::Dp, false);
    if (*train_rl) return run(rl_args, lcm::Solver::Rl, false);
    if (*simulate) return run(sim_args, lcm::parse_solver(solver_name), true);
    if (*compare) {
      const std::string out = compare_out.empty() ? run_b + "/compare" : compare_out;
      const auto r = lcm::compare_runs(run_a, run_b, out);
      std::cout << "employment person-years delta " << r.employment_delta << "\ncompensating consumption "
                << r.compensating_consumption_pct << " %\nwritten to " << out << '\n';
      return 0;
    }
    if (*report) {
      std::cout << lcm::report_run(report_dir);
      return 0;
    }
  } catch (const lcm::ConfigError& e) {
    return fail("config", e.what(), e.key());
  } catch (const lcm::ArtifactError& e) {
    return fail("artifact", e.what());
  } catch (const lcm::binary::FormatError& e) {
    return fail("format", e.what());
  } catch (const lcm::TrainingError& e) {
    return fail("training", e.what());
  } catch (const lcm::MetricsError& e) {
    return fail("metrics", e.what());
  } catch (const lcm::ModelError& e) {
    return fail("model", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
