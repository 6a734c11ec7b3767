#pragma once

// Scenario orchestration: solve, simulate and write the run artifacts; compare
// two runs.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcm/config.hpp"
#include "lcm/dp_solver.hpp"
#include "lcm/rl_solver.hpp"
#include "lcm/policy.hpp"
#include "lcm/simulate.hpp"

namespace lcm {

enum class Solver { Dp, Rl, Random };

const char* to_string(Solver s);
Solver parse_solver(const std::string& name);

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::filesystem::path out_dir;
  bool dump_trajectories = false;
  // Load valuegrid.bin / policy.bin from out_dir when present instead of solving.
  bool reuse_artifacts = false;
  bool quiet = true;
};

struct RunOutcome {
  std::vector<std::string> files;  // names relative to out_dir
  MultiRunResult result;
  double seconds = 0.0;
};

// Writes into out_dir:
//   valuegrid.bin (dp) or policy.bin, policy_run<k>.bin (rl)
//   aggregates.csv, aggregates_sd.csv
//   policy_age<A>_{employed,unemployed}.csv for every configured map age (dp, rl)
//   trajectories.csv (run 0, when requested)
//   summary.json
RunOutcome run_scenario(const ScenarioConfig& cfg, Solver solver, const RunOptions& opt);

// Greedy actions of a trained network on the same slice as the DP policy map.
PolicyMap policy_map(const RlPolicy& policy, const GridSpec& grid, int age, Employment e);
// pension,wage,action
void write_policy_map_csv(const PolicyMap& m, std::ostream& out);

struct CompareOutcome {
  std::vector<std::string> files;
  double employment_delta = 0.0;
  double compensating_consumption_pct = 0.0;
};

// Reads summary.json and aggregates.csv of both runs and writes
// comparison.json, comparison.csv (statistic,run_a,run_b,delta) and
// employment_difference.csv (age,employed_share_a,employed_share_b,delta) to
// out_dir. run_a is the reference for compensating consumption.
CompareOutcome compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                            const std::filesystem::path& out_dir);

// Human-readable table of a run summary.
std::string report_run(const std::filesystem::path& run_dir);

}  // namespace lcm
