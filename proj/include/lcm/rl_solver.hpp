#pragma once

// Advantage actor-critic over sampled life cycles: a policy network giving
// action logits and a value network giving the scaled expected return.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lcm/config.hpp"
#include "lcm/mlp.hpp"
#include "lcm/model.hpp"
#include "lcm/policy.hpp"

namespace lcm {

inline constexpr int kFeatureCount = 8;

struct EncodingNorms {
  int start_age = 18;
  int end_age = 70;
  double wage_ref = 40000.0;
  double pension_ref = 20000.0;
  int tis_cap = 10;

  static EncodingNorms from(const ScenarioConfig& cfg);
  bool operator==(const EncodingNorms&) const = default;
};

// [one-hot(Unemployed, Employed, Retired), age, wage, prev_wage, pension, tis]
void encode(const AgentState& s, const EncodingNorms& n, double* out);
Eigen::VectorXd encode(const AgentState& s, const EncodingNorms& n);

using Probabilities = std::array<double, kActionCount>;

// Softmax over the feasible logits; infeasible entries are exactly 0.
Probabilities masked_softmax(const double* logits, const ActionSet& feasible);
Probabilities policy_forward(const Mlp& net, const Eigen::VectorXd& features, const ActionSet& feasible);
double value_forward(const Mlp& net, const Eigen::VectorXd& features);

// Training samples, one column per decision.
struct SampleBatch {
  Eigen::MatrixXd features;  // kFeatureCount x n
  std::vector<ActionSet> feasible;
  std::vector<Action> actions;
  Eigen::VectorXd returns;  // discounted return from each decision
  std::size_t size() const { return actions.size(); }
};

// -mean(A * log pi(a|s) + c * H(pi(.|s))). grad may be null.
double policy_loss(const Mlp& net, const SampleBatch& b, const Eigen::VectorXd& advantages, double entropy_coef,
                   Eigen::VectorXd* grad);
// mean((V(s) - G)^2). grad may be null.
double value_loss(const Mlp& net, const SampleBatch& b, Eigen::VectorXd* grad);

class RlPolicy final : public Policy {
 public:
  enum class Mode { Sample, Greedy };

  RlPolicy(Mlp policy_net, Mlp value_net, EncodingNorms norms, ModelParams model, std::uint64_t config_hash,
           Mode mode = Mode::Sample);

  Action act(const AgentState& s, Rng& rng) const override;
  void act_batch(std::span<const AgentState> states, std::span<Rng> rngs, std::span<Action> out) const override;
  std::optional<std::uint64_t> config_hash() const override { return hash_; }
  std::string kind() const override { return mode_ == Mode::Sample ? "rl" : "rl-greedy"; }

  Probabilities probabilities(const AgentState& s) const;
  double value(const AgentState& s) const;
  std::shared_ptr<RlPolicy> with_mode(Mode m) const;

  Mode mode() const { return mode_; }
  const Mlp& policy_net() const { return policy_; }
  const Mlp& value_net() const { return value_; }
  const EncodingNorms& norms() const { return norms_; }

 private:
  Action choose(const Probabilities& p, const ActionSet& feasible, Rng& rng) const;

  Mlp policy_;
  Mlp value_;
  EncodingNorms norms_;
  ModelParams model_;
  std::uint64_t hash_;
  Mode mode_;
};

// Draw from p, or masked argmax with ties to the lowest code.
Action sample_action(const Probabilities& p, const ActionSet& feasible, double u);
Action greedy_choice(const Probabilities& p, const ActionSet& feasible);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingTelemetry {
  std::vector<double> mean_return;  // per update: mean discounted return from start
  std::vector<double> policy_loss;
  std::vector<double> value_loss;
  long env_steps = 0;
  int updates = 0;
  double seconds = 0.0;
};

struct TrainResult {
  std::shared_ptr<RlPolicy> policy;
  TrainingTelemetry telemetry;
};

// Trains with cfg.train until total_env_steps decisions have been sampled.
// Independent trainings of one config differ only in run_index. Throws
// TrainingError on a non-finite loss.
TrainResult train(const ScenarioConfig& cfg, std::uint64_t run_index = 0);

// Versioned little-endian binary persistence.
void save_policy(const RlPolicy& p, const std::filesystem::path& path);
std::shared_ptr<RlPolicy> load_policy(const std::filesystem::path& path, const ModelParams& model);

}  // namespace lcm
