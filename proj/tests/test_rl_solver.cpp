#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "lcm/dp_solver.hpp"
#include "lcm/metrics.hpp"
#include "lcm/rl_solver.hpp"
#include "lcm/simulate.hpp"

using namespace lcm;
using namespace testing;

namespace {

// One decision at 18; working pays a fixed margin over the basic benefit.
ScenarioConfig dominant_switch() {
  ScenarioConfig c = default_config(Preset::Desk);
  c.model.end_age = 19;
  c.model.reward.kappa = 0.0;
  c.model.wage.initial_sigma = 0.0;
  c.model.wage.wage_floor = 30000.0;
  c.grid.wage_origin = 30000.0 / 12.0;
  c.simulation.map_ages = {18};
  c.train.optimizer = Optimizer::Adam;
  c.train.learning_rate_policy = 1e-2;
  c.train.learning_rate_value = 1e-2;
  c.train.batch_episodes = 64;
  c.train.total_env_steps = 64 * 200;
  return c;
}

// Every year nets the basic income and utility has no leisure term.
ScenarioConfig constant_reward(int start_age) {
  ScenarioConfig c = default_config(Preset::Desk);
  c.model.start_age = start_age;
  c.model.reward.kappa = 0.0;
  c.fiscal.ubi_enabled = true;
  c.fiscal.flat_tax_rate = 1.0;
  c.fiscal.ss_contribution_rate = 0.0;
  c.fiscal.guarantee_pension = c.fiscal.ubi_amount;
  c.model.terminal.max_age = 70;
  c.model.terminal.survival = {1.0};
  c.simulation.map_ages = {start_age};
  c.train.optimizer = Optimizer::Adam;
  c.train.learning_rate_value = 1e-3;
  c.train.batch_episodes = 32;
  return c;
}

}  // namespace

TEST_SUITE("rl_solver") {
  TEST_CASE("state encoding") {
    const EncodingNorms n;
    const auto f = encode(state(Employment::Employed, 18, 0.0), n);
    CHECK(f.size() == kFeatureCount);
    const std::vector<double> expected{0, 1, 0, 0, 0, 0, 0, 0};
    for (int i = 0; i < kFeatureCount; ++i) CHECK(f[i] == expected[static_cast<std::size_t>(i)]);
    CHECK(encode(state(Employment::Retired, 70), n)[3] == 1.0);
    CHECK(encode(state(Employment::Unemployed, 40, 40000.0), n)[4] == 1.0);
    const auto g = encode(state(Employment::Unemployed, 44, 20000.0, 60000.0, 10000.0, 5), n);
    CHECK(g[0] == 1.0);
    CHECK(g[0] + g[1] + g[2] == 1.0);
    CHECK(g[3] == doctest::Approx(0.5));
    CHECK(g[5] == doctest::Approx(1.5));
    CHECK(g[6] == doctest::Approx(0.5));
    CHECK(g[7] == doctest::Approx(0.5));
  }

  TEST_CASE("masked softmax") {
    const ModelParams m;
    Mlp net(kFeatureCount, {4, 4}, kActionCount, 0.01);
    net.parameters().setZero();
    const EncodingNorms n;
    const AgentState young = state(Employment::Employed, 30);
    const auto p = policy_forward(net, encode(young, n), feasible_actions(young, m));
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
    CHECK(p[2] == 0.0);
    const AgentState retired = state(Employment::Retired, 66);
    const auto q = policy_forward(net, encode(retired, n), feasible_actions(retired, m));
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 0.0);
    CHECK(q[2] == 0.0);

    std::mt19937_64 rng(1);
    net.init_uniform(rng);
    net.parameters() *= 30.0;
    for (int age : {30, 64, 69}) {
      const AgentState s = state(Employment::Unemployed, age, 12345.0, 30000.0, 4000.0, 1);
      const auto r = policy_forward(net, encode(s, n), feasible_actions(s, m));
      CHECK(std::abs(r[0] + r[1] + r[2] - 1.0) < 1e-12);
      if (age < 64) CHECK(r[2] == 0.0);
    }
  }

  TEST_CASE("zero parameters give zero value") {
    Mlp v(kFeatureCount, {128, 128, 128}, 1, 0.01);
    v.parameters().setZero();
    CHECK(value_forward(v, encode(state(Employment::Employed, 40), EncodingNorms{})) == 0.0);
  }

  TEST_CASE("policy and value gradients match central differences") {
    const ModelParams m;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int point = 0; point < 10; ++point) {
      const SampleBatch b = random_batch(rng, 12, m);
      Eigen::VectorXd adv(12);
      for (int i = 0; i < 12; ++i) adv[i] = u(rng);

      Mlp pnet(kFeatureCount, {32, 32, 32}, kActionCount, 0.01);
      pnet.init_uniform(rng);
      Eigen::VectorXd gp;
      policy_loss(pnet, b, adv, 0.05, &gp);
      const double ep =
          worst_gradient_error(pnet, gp, [&] { return policy_loss(pnet, b, adv, 0.05, nullptr); }, rng, 120);
      CHECK(ep < 1e-4);

      Mlp vnet(kFeatureCount, {128, 128, 128}, 1, 0.01);
      vnet.init_uniform(rng);
      Eigen::VectorXd gv;
      value_loss(vnet, b, &gv);
      const double ev = worst_gradient_error(vnet, gv, [&] { return value_loss(vnet, b, nullptr); }, rng, 120);
      CHECK(ev < 1e-4);
    }
  }

  TEST_CASE("full gradient check on a small network") {
    const ModelParams m;
    std::mt19937_64 rng(5);
    const SampleBatch b = random_batch(rng, 9, m);
    Eigen::VectorXd adv = Eigen::VectorXd::LinSpaced(9, -1.0, 1.0);
    Mlp net(kFeatureCount, {5, 4}, kActionCount, 0.2);
    net.init_uniform(rng);
    Eigen::VectorXd g;
    policy_loss(net, b, adv, 0.3, &g);
    const auto count = static_cast<int>(net.parameter_count());
    CHECK(worst_gradient_error(net, g, [&] { return policy_loss(net, b, adv, 0.3, nullptr); }, rng, count) < 1e-4);
  }

  TEST_CASE("dominant action is learned and returns improve") {
    const ScenarioConfig c = dominant_switch();
    const TrainResult r = train(c);
    const AgentState s = initial_state(c.model, *std::make_unique<Rng>(1));
    CHECK(r.policy->probabilities(s)[static_cast<int>(Action::Switch)] > 0.95);

    const auto& mr = r.telemetry.mean_return;
    REQUIRE(mr.size() == 200);
    const std::size_t half = mr.size() / 2, q = half / 2;
    auto mean = [](auto b, auto e) { return std::accumulate(b, e, 0.0) / static_cast<double>(e - b); };
    auto sd = [&](auto b, auto e) {
      const double mu = mean(b, e);
      double s2 = 0.0;
      for (auto it = b; it != e; ++it) s2 += (*it - mu) * (*it - mu);
      return std::sqrt(s2 / static_cast<double>(e - b - 1));
    };
    const auto a0 = mr.begin() + static_cast<long>(half), a1 = a0 + static_cast<long>(q), a2 = mr.end();
    const double se = std::sqrt(std::pow(sd(a0, a1), 2) / (a1 - a0) + std::pow(sd(a1, a2), 2) / (a2 - a1));
    CHECK(mean(a1, a2) >= mean(a0, a1) - 2.0 * se);
    CHECK(mean(a1, a2) > mr.front());
    CHECK(r.telemetry.env_steps == c.train.total_env_steps);
    CHECK(r.telemetry.updates == 200);
  }

  TEST_CASE("entropy-dominated training stays near uniform") {
    ScenarioConfig c = dominant_switch();
    c.train.entropy_coefficient = 1e4;
    c.train.normalize_advantages = true;
    const TrainResult r = train(c);
    const AgentState s = initial_state(c.model, *std::make_unique<Rng>(1));
    const auto p = r.policy->probabilities(s);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(0.1));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(0.1));
    CHECK(p[2] == 0.0);
  }

  TEST_CASE("value network fits a constant-reward environment") {
    ScenarioConfig c = constant_reward(50);
    c.train.total_env_steps = 20L * 32 * 1500;
    const TrainResult r = train(c);
    const double rew = std::log(6000.0) / 10.0, g = c.model.reward.gamma;
    SimulationOptions o;
    o.agents = 20;
    o.keep_trajectories = true;
    const auto sim = run_population(*r.policy, c, o);
    for (const auto& t : sim.trajectories)
      for (const auto& rec : t.records) {
        const int age = rec.state.age;
        if (age > 69) continue;
        const double target = rew * (1 - std::pow(g, 71 - age)) / (1 - g);
        const double v = r.policy->value(rec.state);
        CHECK_MESSAGE(std::abs(v - target) / target < 0.05, age << " " << v << " " << target);
      }
  }

  TEST_CASE("sample mode follows the forward-pass probabilities") {
    const ModelParams m;
    Mlp pnet(kFeatureCount, {32, 32, 32}, kActionCount, 0.01), vnet(kFeatureCount, {8}, 1, 0.01);
    std::mt19937_64 init(3);
    pnet.init_uniform(init);
    pnet.parameters() *= 4.0;
    vnet.init_uniform(init);
    const RlPolicy policy(pnet, vnet, EncodingNorms{}, m, 7);
    const AgentState s = state(Employment::Unemployed, 65, 25000.0, 30000.0, 9000.0, 1);
    const auto p = policy.probabilities(s);
    Rng rng(17);
    std::vector<long> counts(3, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<int>(policy.act(s, rng))];
    CHECK(testing::chi_square_p(counts, {p[0], p[1], p[2]}) > 0.001);

    const auto greedy = policy.with_mode(RlPolicy::Mode::Greedy);
    const Action first = greedy->act(s, rng);
    for (int i = 0; i < 100; ++i) CHECK(greedy->act(s, rng) == first);
    CHECK(first == greedy_choice(p, feasible_actions(s, m)));
    CHECK(greedy->kind() == "rl-greedy");
    CHECK(policy.kind() == "rl");

    const AgentState retired = state(Employment::Retired, 66);
    for (int i = 0; i < 50; ++i) CHECK(policy.act(retired, rng) == Action::Stay);
  }

  TEST_CASE("batched actions equal one-at-a-time actions") {
    const ModelParams m;
    Mlp pnet(kFeatureCount, {32, 32, 32}, kActionCount, 0.01), vnet(kFeatureCount, {8}, 1, 0.01);
    std::mt19937_64 init(4);
    pnet.init_uniform(init);
    pnet.parameters() *= 3.0;
    const RlPolicy policy(pnet, vnet, EncodingNorms{}, m, 7);
    std::vector<AgentState> states;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i)
      states.push_back(state(static_cast<Employment>(static_cast<int>(u(gen) * 3)), 20 + static_cast<int>(u(gen) * 50),
                             8000 + 50000 * u(gen), 40000 * u(gen), 20000 * u(gen), static_cast<int>(u(gen) * 5)));
    std::vector<Rng> a(states.size()), b(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) a[i] = b[i] = make_rng(9, i);
    std::vector<Action> batched(states.size());
    policy.act_batch(states, a, batched);
    for (std::size_t i = 0; i < states.size(); ++i) CHECK(batched[i] == policy.act(states[i], b[i]));
  }

  TEST_CASE("sample_action and greedy_choice") {
    ActionSet two;
    two.size = 2;
    two.items = {Action::Stay, Action::Switch, Action::Stay};
    const Probabilities p{0.25, 0.75, 0.0};
    CHECK(sample_action(p, two, 0.1) == Action::Stay);
    CHECK(sample_action(p, two, 0.3) == Action::Switch);
    CHECK(sample_action(p, two, 0.999999) == Action::Switch);
    CHECK(greedy_choice(p, two) == Action::Switch);
    CHECK(greedy_choice({0.5, 0.5, 0.0}, two) == Action::Stay);
  }

  TEST_CASE("training is reproducible and persistence round-trips") {
    ScenarioConfig c = testing::small_config(64);
    c.train.total_env_steps = 3000;
    const TrainResult a = train(c);
    const TrainResult b = train(c);
    CHECK(a.policy->policy_net().parameters() == b.policy->policy_net().parameters());
    CHECK(a.policy->value_net().parameters() == b.policy->value_net().parameters());
    CHECK(a.telemetry.mean_return == b.telemetry.mean_return);
    const TrainResult other = train(c, 1);
    CHECK(other.policy->policy_net().parameters() != a.policy->policy_net().parameters());
    CHECK(*other.policy->config_hash() == c.hash());

    const auto dir = testing::scratch_dir("policy");
    save_policy(*a.policy, dir / "p.bin");
    const auto back = load_policy(dir / "p.bin", c.model);
    CHECK(back->policy_net().parameters() == a.policy->policy_net().parameters());
    CHECK(back->value_net().parameters() == a.policy->value_net().parameters());
    CHECK(back->value_net().widths() == a.policy->value_net().widths());
    CHECK(back->norms() == a.policy->norms());
    CHECK(back->config_hash() == a.policy->config_hash());
    std::ofstream(dir / "bad.bin") << "LCMPOLCY truncated";
    CHECK_THROWS(load_policy(dir / "bad.bin", c.model));
  }

  TEST_CASE("diverging training reports a diagnostic") {
    ScenarioConfig c = testing::small_config(66);
    c.train.learning_rate_value = 1e300;
    c.train.gradient_clip_norm = 1e300;
    c.train.momentum = 0.0;
    c.train.total_env_steps = 5000;
    try {
      train(c);
      FAIL("expected a TrainingError");
    } catch (const TrainingError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("learning rates") != std::string::npos);
      CHECK(msg.find("sd") != std::string::npos);
    }
  }

  TEST_CASE("learned policy is close to DP on a short horizon") {
    ScenarioConfig c = testing::small_config(62);
    c.train.optimizer = Optimizer::Adam;
    c.train.learning_rate_policy = 1e-3;
    c.train.normalize_advantages = true;
    c.train.total_env_steps = 300000;
    const ValueGrid vg = backward_induct(c);
    const DpPolicy dp(std::make_shared<ValueGrid>(backward_induct(c)), c);
    const TrainResult r = train(c);
    SimulationOptions o;
    o.agents = 4000;
    o.seed = 11;
    o.keep_trajectories = true;
    const auto ref = run_population(dp, c, o);
    const auto alt = run_population(*r.policy->with_mode(RlPolicy::Mode::Greedy), c, o);
    const double x = compensating_consumption(ref.trajectories, alt.trajectories, c.model.reward.gamma);
    MESSAGE("compensating consumption RL vs DP: " << x << " %");
    CHECK(x <= 1.0);
  }
}
