// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <memory>

#include "lcm/config.hpp"
#include "lcm/dp_solver.hpp"
#include "lcm/policy.hpp"
#include "lcm/simulate.hpp"

namespace {

using namespace lcm;

const ScenarioConfig& desk() {
  static const ScenarioConfig c = default_config(Preset::Desk);
  return c;
}

const DpPolicy& desk_policy() {
  static const DpPolicy p(std::make_shared<ValueGrid>(backward_induct(desk())), desk());
  return p;
}

// Desk grid from start age 60; the serial reference needs minutes for the full horizon.
const ScenarioConfig& late_start() {
  static const ScenarioConfig c = [] {
    ScenarioConfig c = default_config(Preset::Desk);
    c.model.start_age = 60;
    c.simulation.map_ages = {60};
    return c;
  }();
  return c;
}

void BM_BackwardInduct(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(backward_induct(late_start()));
}

void BM_BackwardInductReference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(backward_induct_reference(late_start()));
}

SimulationOptions sim_options(long agents) {
  SimulationOptions o;
  o.agents = agents;
  o.seed = 7;
  return o;
}

void BM_RunPopulation(benchmark::State& state) {
  const DpPolicy& p = desk_policy();
  for (auto _ : state) benchmark::DoNotOptimize(run_population(p, desk(), sim_options(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RunPopulationReference(benchmark::State& state) {
  const DpPolicy& p = desk_policy();
  for (auto _ : state) benchmark::DoNotOptimize(run_population_reference(p, desk(), sim_options(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BackwardInduct)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardInductReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunPopulation)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunPopulationReference)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
