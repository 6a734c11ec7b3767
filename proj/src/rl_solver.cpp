#include "lcm/rl_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lcm/binary_io.hpp"
#include "lcm/fiscal.hpp"
#include "lcm/rng.hpp"

namespace lcm {

EncodingNorms EncodingNorms::from(const ScenarioConfig& cfg) {
  return {cfg.model.start_age, cfg.model.end_age, cfg.train.wage_ref, cfg.train.pension_ref, cfg.model.tis_cap};
}

void encode(const AgentState& s, const EncodingNorms& n, double* out) {
  out[0] = s.employment == Employment::Unemployed ? 1.0 : 0.0;
  out[1] = s.employment == Employment::Employed ? 1.0 : 0.0;
  out[2] = s.employment == Employment::Retired ? 1.0 : 0.0;
  out[3] = static_cast<double>(s.age - n.start_age) / (n.end_age - n.start_age);
  out[4] = s.wage / n.wage_ref;
  out[5] = s.prev_wage / n.wage_ref;
  out[6] = s.pension / n.pension_ref;
  out[7] = static_cast<double>(s.time_in_state) / n.tis_cap;
}

Eigen::VectorXd encode(const AgentState& s, const EncodingNorms& n) {
  Eigen::VectorXd f(kFeatureCount);
  encode(s, n, f.data());
  return f;
}

Probabilities masked_softmax(const double* logits, const ActionSet& feasible) {
  Probabilities p{};
  double top = -std::numeric_limits<double>::infinity();
  for (Action a : feasible) top = std::max(top, logits[static_cast<int>(a)]);
  double total = 0.0;
  for (Action a : feasible) {
    const int i = static_cast<int>(a);
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (Action a : feasible) p[static_cast<int>(a)] /= total;
  return p;
}

Probabilities policy_forward(const Mlp& net, const Eigen::VectorXd& features, const ActionSet& feasible) {
  const Eigen::MatrixXd logits = net.forward(features);
  return masked_softmax(logits.data(), feasible);
}

double value_forward(const Mlp& net, const Eigen::VectorXd& features) { return net.forward(features)(0, 0); }

double policy_loss(const Mlp& net, const SampleBatch& b, const Eigen::VectorXd& advantages, double entropy_coef,
                   Eigen::VectorXd* grad) {
  const Eigen::Index n = static_cast<Eigen::Index>(b.size());
  Mlp::Cache cache;
  const Eigen::MatrixXd logits = grad ? net.forward(b.features, cache) : net.forward(b.features);
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(kActionCount, n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const ActionSet& feasible = b.feasible[j];
    const Probabilities p = masked_softmax(logits.col(j).data(), feasible);
    double entropy = 0.0;
    for (Action a : feasible) {
      const double pa = p[static_cast<int>(a)];
      if (pa > 0.0) entropy -= pa * std::log(pa);
    }
    const int taken = static_cast<int>(b.actions[j]);
    const double adv = advantages[j];
    loss -= adv * std::log(p[taken]) + entropy_coef * entropy;
    if (grad) {
      for (Action a : feasible) {
        const int i = static_cast<int>(a);
        const double log_p = p[i] > 0.0 ? std::log(p[i]) : 0.0;
        const double d_logp = (i == taken ? 1.0 : 0.0) - p[i];
        const double d_entropy = -p[i] * (log_p + entropy);
        dlogits(i, j) = -(adv * d_logp + entropy_coef * d_entropy) / n;
      }
    }
  }
  if (grad) *grad = net.backward(cache, dlogits);
  return loss / n;
}

double value_loss(const Mlp& net, const SampleBatch& b, Eigen::VectorXd* grad) {
  const Eigen::Index n = static_cast<Eigen::Index>(b.size());
  Mlp::Cache cache;
  const Eigen::MatrixXd v = grad ? net.forward(b.features, cache) : net.forward(b.features);
  const Eigen::RowVectorXd err = v.row(0) - b.returns.transpose();
  if (grad) *grad = net.backward(cache, (2.0 / n) * err);
  return err.squaredNorm() / n;
}

Action sample_action(const Probabilities& p, const ActionSet& feasible, double u) {
  double acc = 0.0;
  for (Action a : feasible) {
    acc += p[static_cast<int>(a)];
    if (u < acc) return a;
  }
  // rounding left u above the cumulative total: last action with mass
  for (int i = feasible.size - 1; i >= 0; --i)
    if (p[static_cast<int>(feasible.items[i])] > 0.0) return feasible.items[i];
  return feasible.items[0];
}

Action greedy_choice(const Probabilities& p, const ActionSet& feasible) {
  Action best = feasible.items[0];
  for (Action a : feasible)
    if (p[static_cast<int>(a)] > p[static_cast<int>(best)]) best = a;
  return best;
}

RlPolicy::RlPolicy(Mlp policy_net, Mlp value_net, EncodingNorms norms, ModelParams model, std::uint64_t config_hash,
                   Mode mode)
    : policy_(std::move(policy_net)),
      value_(std::move(value_net)),
      norms_(norms),
      model_(std::move(model)),
      hash_(config_hash),
      mode_(mode) {
  if (policy_.inputs() != kFeatureCount || policy_.outputs() != kActionCount)
    throw ModelError("RlPolicy: policy network must map 8 features to 3 logits");
  if (value_.inputs() != kFeatureCount || value_.outputs() != 1)
    throw ModelError("RlPolicy: value network must map 8 features to 1 value");
}

Action RlPolicy::choose(const Probabilities& p, const ActionSet& feasible, Rng& rng) const {
  if (mode_ == Mode::Greedy) return greedy_choice(p, feasible);
  return sample_action(p, feasible, uniform01(rng));
}

Action RlPolicy::act(const AgentState& s, Rng& rng) const {
  return choose(probabilities(s), feasible_actions(s, model_), rng);
}

void RlPolicy::act_batch(std::span<const AgentState> states, std::span<Rng> rngs, std::span<Action> out) const {
  const Eigen::Index n = static_cast<Eigen::Index>(states.size());
  if (n == 0) return;
  Eigen::MatrixXd x(kFeatureCount, n);
  for (Eigen::Index j = 0; j < n; ++j) encode(states[j], norms_, x.col(j).data());
  const Eigen::MatrixXd logits = policy_.forward(x);
  for (Eigen::Index j = 0; j < n; ++j) {
    const ActionSet feasible = feasible_actions(states[j], model_);
    out[j] = choose(masked_softmax(logits.col(j).data(), feasible), feasible, rngs[j]);
  }
}

Probabilities RlPolicy::probabilities(const AgentState& s) const {
  return policy_forward(policy_, encode(s, norms_), feasible_actions(s, model_));
}

double RlPolicy::value(const AgentState& s) const { return value_forward(value_, encode(s, norms_)); }

std::shared_ptr<RlPolicy> RlPolicy::with_mode(Mode m) const {
  return std::make_shared<RlPolicy>(policy_, value_, norms_, model_, hash_, m);
}

namespace {

class ParamOptimizer {
 public:
  ParamOptimizer(const TrainConfig& tc, double lr, Eigen::Index n)
      : kind_(tc.optimizer), lr_(lr), momentum_(tc.momentum), m_(Eigen::VectorXd::Zero(n)),
        v_(Eigen::VectorXd::Zero(n)) {}

  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& g) {
    if (kind_ == Optimizer::SgdMomentum) {
      m_ = momentum_ * m_ + g;
      params -= lr_ * m_;
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    m_ = b1 * m_ + (1.0 - b1) * g;
    v_ = b2 * v_ + (1.0 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
  }

 private:
  Optimizer kind_;
  double lr_, momentum_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

void clip(Eigen::VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm) g *= max_norm / norm;
}

}  // namespace

TrainResult train(const ScenarioConfig& cfg, std::uint64_t run_index) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainConfig& tc = cfg.train;
  const ModelParams& model = cfg.model;
  const EncodingNorms norms = EncodingNorms::from(cfg);

  Mlp pnet(kFeatureCount, tc.policy_hidden, kActionCount, tc.leaky_slope);
  Mlp vnet(kFeatureCount, tc.value_hidden, 1, tc.leaky_slope);
  const std::uint64_t seed = derive_seed(tc.seed, run_index);
  Rng init = make_rng(seed, 0, 0);
  pnet.init_uniform(init);
  vnet.init_uniform(init);
  ParamOptimizer popt(tc, tc.learning_rate_policy, pnet.parameter_count());
  ParamOptimizer vopt(tc, tc.learning_rate_value, vnet.parameter_count());

  const int B = tc.batch_episodes;
  const int D = model.decision_count();
  const double gamma = model.reward.gamma;
  TrainingTelemetry tel;

  std::vector<AgentState> states(B);
  std::vector<Rng> rngs(B);
  Eigen::MatrixXd rewards(B, D);
  SampleBatch batch;
  batch.features.resize(kFeatureCount, static_cast<Eigen::Index>(B) * D);
  batch.feasible.resize(static_cast<std::size_t>(B) * D);
  batch.actions.resize(static_cast<std::size_t>(B) * D);
  batch.returns.resize(static_cast<Eigen::Index>(B) * D);
  std::vector<Probabilities> probs(B);

  while (tel.env_steps < tc.total_env_steps) {
    const int update = tel.updates;
    for (int b = 0; b < B; ++b) {
      rngs[b] = make_rng(seed, static_cast<std::uint64_t>(update) + 1, static_cast<std::uint64_t>(b));
      states[b] = initial_state(model, rngs[b]);
    }
    for (int t = 0; t < D; ++t) {
      const Eigen::Index base = static_cast<Eigen::Index>(t) * B;
      for (int b = 0; b < B; ++b) encode(states[b], norms, batch.features.col(base + b).data());
      const Eigen::MatrixXd logits = pnet.forward(batch.features.middleCols(base, B));
      for (int b = 0; b < B; ++b) {
        const std::size_t j = static_cast<std::size_t>(base + b);
        batch.feasible[j] = feasible_actions(states[b], model);
        const Probabilities p = masked_softmax(logits.col(b).data(), batch.feasible[j]);
        batch.actions[j] = sample_action(p, batch.feasible[j], uniform01(rngs[b]));
        const StepResult r = sample_step(states[b], batch.actions[j], rngs[b], model, cfg.fiscal);
        rewards(b, t) = r.reward;
        states[b] = r.next;
      }
    }
    double mean_return = 0.0;
    for (int b = 0; b < B; ++b) {
      double g = terminal_value(states[b], model, cfg.fiscal);
      for (int t = D - 1; t >= 0; --t) {
        g = rewards(b, t) + gamma * g;
        batch.returns[static_cast<Eigen::Index>(t) * B + b] = g;
      }
      mean_return += g;
    }
    mean_return /= B;

    const Eigen::MatrixXd v = vnet.forward(batch.features);
    Eigen::VectorXd adv = batch.returns - v.row(0).transpose();
    if (tc.normalize_advantages) {
      const double mu = adv.mean();
      const double sd = std::sqrt((adv.array() - mu).square().mean());
      adv = (adv.array() - mu) / (sd + 1e-8);
    }
    Eigen::VectorXd gp, gv;
    const double pl = policy_loss(pnet, batch, adv, tc.entropy_coefficient, &gp);
    const double vl = value_loss(vnet, batch, &gv);
    if (!std::isfinite(pl) || !std::isfinite(vl) || !gp.allFinite() || !gv.allFinite()) {
      const double sd = std::sqrt((batch.returns.array() - batch.returns.mean()).square().mean());
      std::ostringstream msg;
      msg << "non-finite loss at update " << update << " (policy loss " << pl << ", value loss " << vl
          << ", learning rates " << tc.learning_rate_policy << "/" << tc.learning_rate_value << ", batch return mean "
          << batch.returns.mean() << " sd " << sd << ")";
      throw TrainingError(msg.str());
    }
    clip(gp, tc.gradient_clip_norm);
    clip(gv, tc.gradient_clip_norm);
    popt.apply(pnet.parameters(), gp);
    vopt.apply(vnet.parameters(), gv);

    tel.mean_return.push_back(mean_return);
    tel.policy_loss.push_back(pl);
    tel.value_loss.push_back(vl);
    tel.env_steps += static_cast<long>(B) * D;
    ++tel.updates;
  }
  tel.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::make_shared<RlPolicy>(std::move(pnet), std::move(vnet), norms, model, cfg.hash()), std::move(tel)};
}

namespace {

constexpr char kMagic[9] = "LCMPOLCY";
constexpr std::uint32_t kVersion = 1;

void put_net(binary::Writer& w, const Mlp& net) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.widths().size()));
  for (int width : net.widths()) w.put<std::int32_t>(width);
  w.put<double>(net.leaky_slope());
  w.put<std::uint64_t>(static_cast<std::uint64_t>(net.parameter_count()));
  const auto& p = net.parameters();
  w.put_all(std::vector<double>(p.data(), p.data() + p.size()));
}

Mlp get_net(binary::Reader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n < 2 || n > 64) throw binary::FormatError("policy file: bad layer count");
  std::vector<int> widths(n);
  for (auto& x : widths) {
    x = r.get<std::int32_t>();
    if (x <= 0 || x > 1 << 16) throw binary::FormatError("policy file: bad layer width");
  }
  const double slope = r.get<double>();
  Mlp net(widths.front(), std::vector<int>(widths.begin() + 1, widths.end() - 1), widths.back(), slope);
  const auto count = r.get<std::uint64_t>();
  if (count != static_cast<std::uint64_t>(net.parameter_count()))
    throw binary::FormatError("policy file: parameter count does not match layer shapes");
  const auto values = r.get_all<double>(count);
  net.parameters() = Eigen::Map<const Eigen::VectorXd>(values.data(), net.parameter_count());
  return net;
}

}  // namespace

// Layout: magic, u32 version, u64 config hash, i32 start_age, i32 end_age,
// i32 tis_cap, f64 wage_ref, f64 pension_ref, then the policy and value
// networks as: u32 layer count L, L x i32 widths, f64 leaky slope,
// u64 parameter count, f64 parameters (see Mlp for the order).
void save_policy(const RlPolicy& p, const std::filesystem::path& path) {
  binary::Writer w(path);
  w.bytes(kMagic, 8);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(*p.config_hash());
  const auto& n = p.norms();
  w.put<std::int32_t>(n.start_age);
  w.put<std::int32_t>(n.end_age);
  w.put<std::int32_t>(n.tis_cap);
  w.put<double>(n.wage_ref);
  w.put<double>(n.pension_ref);
  put_net(w, p.policy_net());
  put_net(w, p.value_net());
  w.finish();
}

std::shared_ptr<RlPolicy> load_policy(const std::filesystem::path& path, const ModelParams& model) {
  binary::Reader r(path);
  r.expect_magic(kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw binary::FormatError("policy file: unsupported version " + std::to_string(version));
  const auto hash = r.get<std::uint64_t>();
  EncodingNorms n;
  n.start_age = r.get<std::int32_t>();
  n.end_age = r.get<std::int32_t>();
  n.tis_cap = r.get<std::int32_t>();
  n.wage_ref = r.get<double>();
  n.pension_ref = r.get<double>();
  if (n.end_age <= n.start_age || n.tis_cap <= 0 || !(n.wage_ref > 0.0) || !(n.pension_ref > 0.0))
    throw binary::FormatError("policy file: bad encoding constants");
  Mlp pnet = get_net(r);
  Mlp vnet = get_net(r);
  r.expect_end();
  return std::make_shared<RlPolicy>(std::move(pnet), std::move(vnet), n, model, hash);
}

}  // namespace lcm
