#pragma once

// Seeded Monte Carlo populations under any policy.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lcm/config.hpp"
#include "lcm/metrics.hpp"
#include "lcm/policy.hpp"
#include "lcm/trajectory.hpp"

namespace lcm {

struct AgeAggregate {
  int age = 0;
  double employed_share = 0.0;
  double unemployed_share = 0.0;
  double retired_share = 0.0;
  double mean_net_income = 0.0;
};

struct AggregateReport {
  long population = 0;
  std::vector<AgeAggregate> ages;
  StatBlock stats;
};

struct SimulationOptions {
  long agents = 10000;
  std::uint64_t seed = 20201023;
  std::uint64_t run_index = 0;
  bool keep_trajectories = false;
  int threads = 0;  // 0: OpenMP default
};

struct PopulationResult {
  std::vector<Trajectory> trajectories;  // empty unless kept
  AggregateReport report;
  PopulationTotals totals;
};

// Agents are processed in fixed chunks with per-agent RNG streams
// derive_seed(seed, run_index, agent), so results do not depend on threads.
// Throws ModelError when the policy was solved for a different config.
PopulationResult run_population(const Policy& policy, const ScenarioConfig& cfg, const SimulationOptions& opt);
// Serial agent-by-agent loop using Policy::act; always keeps trajectories.
PopulationResult run_population_reference(const Policy& policy, const ScenarioConfig& cfg,
                                          const SimulationOptions& opt);

// Aggregates and totals recomputed from a list of trajectories.
AggregateReport aggregate(std::span<const Trajectory> trajs, const ScenarioConfig& cfg);

struct MultiRunResult {
  std::vector<AggregateReport> runs;
  AggregateReport mean;
  AggregateReport sd;  // population standard deviation across runs
};

// Runs K populations with run indices 0..K-1. The producer is called once per
// run; returning the same policy every time reuses it.
using PolicyProducer = std::function<PolicyPtr(int run)>;
MultiRunResult multi_run(const PolicyProducer& produce, const ScenarioConfig& cfg, int runs, long agents,
                         std::uint64_t base_seed);

// Invariant violations found in a population; empty when all hold.
std::vector<std::string> check_invariants(std::span<const Trajectory> trajs, const AggregateReport& report,
                                          const ScenarioConfig& cfg);

// age,employed_share,unemployed_share,retired_share,mean_net_income
void write_aggregates_csv(const AggregateReport& r, std::ostream& out);
// agent,age,employment,pension,prev_wage,time_in_state,wage,action,worked,net_income,utility,reward
void write_trajectories_csv(std::span<const Trajectory> trajs, std::ostream& out);

}  // namespace lcm
