#include "lcm/policy.hpp"

#include "lcm/dp_solver.hpp"

namespace lcm {

void Policy::act_batch(std::span<const AgentState> states, std::span<Rng> rngs, std::span<Action> out) const {
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = act(states[i], rngs[i]);
}

DpPolicy::DpPolicy(std::shared_ptr<const ValueGrid> grid, ScenarioConfig cfg)
    : grid_(std::move(grid)), cfg_(std::move(cfg)) {
  if (grid_->config_hash() != cfg_.hash())
    throw ModelError("DpPolicy: value grid was solved for config " + hash_hex(grid_->config_hash()) +
                     ", not " + hash_hex(cfg_.hash()));
}

Action DpPolicy::act(const AgentState& s, Rng&) const { return greedy_action(*grid_, cfg_, s); }

std::optional<std::uint64_t> DpPolicy::config_hash() const { return grid_->config_hash(); }

Action RandomPolicy::act(const AgentState& s, Rng& rng) const {
  const ActionSet feasible = feasible_actions(s, model_);
  if (feasible.size == 1) return feasible.items[0];
  std::uniform_int_distribution<int> pick(0, feasible.size - 1);
  return feasible.items[pick(rng)];
}

PolicyPtr random_policy(const ModelParams& model) { return std::make_shared<RandomPolicy>(model); }

}  // namespace lcm
