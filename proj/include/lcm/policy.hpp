#pragma once

// Uniform state -> action interface over the solvers' outputs.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "lcm/config.hpp"
#include "lcm/model.hpp"
#include "lcm/rng.hpp"

namespace lcm {

class ValueGrid;

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const AgentState& s, Rng& rng) const = 0;
  // One action per state, each drawn with its own generator. The default
  // loops over act(); implementations may batch.
  virtual void act_batch(std::span<const AgentState> states, std::span<Rng> rngs, std::span<Action> out) const;
  // Hash of the configuration the policy was solved for; nullopt when the
  // policy does not depend on the model (random, scripted).
  virtual std::optional<std::uint64_t> config_hash() const { return std::nullopt; }
  virtual std::string kind() const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

// Greedy policy of a solved value grid.
class DpPolicy final : public Policy {
 public:
  DpPolicy(std::shared_ptr<const ValueGrid> grid, ScenarioConfig cfg);
  Action act(const AgentState& s, Rng& rng) const override;
  std::optional<std::uint64_t> config_hash() const override;
  std::string kind() const override { return "dp"; }
  const ValueGrid& grid() const { return *grid_; }

 private:
  std::shared_ptr<const ValueGrid> grid_;
  ScenarioConfig cfg_;
};

// Uniform over the feasible actions.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(ModelParams model) : model_(std::move(model)) {}
  Action act(const AgentState& s, Rng& rng) const override;
  std::string kind() const override { return "random"; }

 private:
  ModelParams model_;
};

PolicyPtr random_policy(const ModelParams& model);

// Arbitrary rule, for scripted behaviour in tests and experiments.
class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<Action(const AgentState&, Rng&)>;
  FunctionPolicy(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  Action act(const AgentState& s, Rng& rng) const override { return fn_(s, rng); }
  std::string kind() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

}  // namespace lcm
