#include "lcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lcm/fiscal.hpp"

namespace lcm {

const char* to_string(Employment e) {
  switch (e) {
    case Employment::Unemployed: return "unemployed";
    case Employment::Employed: return "employed";
    case Employment::Retired: return "retired";
  }
  return "?";
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Stay: return "stay";
    case Action::Switch: return "switch";
    case Action::Retire: return "retire";
  }
  return "?";
}

double WageProcessParams::clamp(double w) const { return std::clamp(w, wage_floor, wage_cap); }

std::vector<double> TerminalParams::survival_curve(int horizon_end) const {
  const int n = max_age - horizon_end + 1;
  if (n < 1) throw ModelError("terminal.max_age must be >= end_age");
  if (!survival.empty()) {
    if (static_cast<int>(survival.size()) != n)
      throw ModelError("terminal.survival must have max_age - end_age + 1 entries");
    return survival;
  }
  std::vector<double> s(n);
  s[0] = 1.0;
  for (int k = 1; k < n; ++k) {
    const double hazard = hazard_scale * std::exp(hazard_growth * (k - 1));
    s[k] = s[k - 1] * std::exp(-hazard);
  }
  return s;
}

int ModelParams::feasible_retirement_age() const {
  return static_cast<int>(std::ceil(min_retirement_age));
}

void validate(const ModelParams& m) {
  const auto& r = m.reward;
  if (!(r.kappa >= 0.0)) throw ModelError("model.kappa must be >= 0");
  if (!(r.gamma >= 0.0 && r.gamma < 1.0)) throw ModelError("model.gamma must lie in [0,1)");
  if (!(r.reward_scale > 0.0)) throw ModelError("model.reward_scale must be > 0");
  const auto& w = m.wage;
  if (!(w.rho >= 0.0 && w.rho <= 1.0)) throw ModelError("wage.rho must lie in [0,1]");
  if (!(w.sigma >= 0.0)) throw ModelError("wage.sigma must be >= 0");
  if (!(w.initial_sigma >= 0.0)) throw ModelError("wage.initial_sigma must be >= 0");
  if (!(w.unemployment_penalty > 0.0 && w.unemployment_penalty <= 1.0))
    throw ModelError("wage.unemployment_penalty must lie in (0,1]");
  if (!(w.wage_floor > 0.0 && w.wage_floor < w.wage_cap))
    throw ModelError("wage.wage_floor must satisfy 0 < wage_floor < wage_cap");
  if (m.start_age >= m.end_age) throw ModelError("model.start_age must be < end_age");
  if (m.tis_cap < 1) throw ModelError("model.tis_cap must be >= 1");
  const auto s = m.terminal.survival_curve(m.end_age);
  if (s[0] != 1.0) throw ModelError("terminal.survival[0] must be 1");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(s[k] >= 0.0 && s[k] <= 1.0)) throw ModelError("terminal.survival values must lie in [0,1]");
    if (k > 0 && s[k] > s[k - 1]) throw ModelError("terminal.survival must be non-increasing");
  }
}

void validate(const AgentState& s, const ModelParams& m) {
  if (s.age < m.start_age || s.age > m.end_age) throw ModelError("state: age outside horizon");
  if (!(s.pension >= 0.0)) throw ModelError("state: negative pension");
  if (!(s.prev_wage >= 0.0)) throw ModelError("state: negative prev_wage");
  if (s.time_in_state < 0) throw ModelError("state: negative time_in_state");
  if (!(s.wage >= m.wage.wage_floor && s.wage <= m.wage.wage_cap))
    throw ModelError("state: wage outside [wage_floor, wage_cap]");
}

ActionSet feasible_actions(const AgentState& s, const ModelParams& m) {
  ActionSet set;
  set.items[set.size++] = Action::Stay;
  if (s.employment == Employment::Retired) return set;
  set.items[set.size++] = Action::Switch;
  if (s.age >= m.feasible_retirement_age()) set.items[set.size++] = Action::Retire;
  return set;
}

double unscaled_utility(Employment during_year, double net_income, const RewardParams& p) {
  if (!(net_income > 0.0)) throw ModelError("reward: non-positive net income");
  return std::log(net_income) - (during_year == Employment::Employed ? p.kappa : 0.0);
}

double reward(Employment during_year, double net_income, const RewardParams& p) {
  return unscaled_utility(during_year, net_income, p) / p.reward_scale;
}

double next_log_wage_mean(Employment during_year, double wage, int next_age, const WageProcessParams& w) {
  const double penalty = during_year == Employment::Unemployed ? w.unemployment_penalty : 1.0;
  return (1.0 - w.rho) * w.age_profile(next_age) + w.rho * std::log(wage * penalty);
}

double WageDistribution::at_shock(double z) const {
  return std::clamp(std::exp(log_mean_ + log_sd_ * z), floor_, cap_);
}

double WageDistribution::quantile(double u) const {
  if (degenerate()) return at_shock(0.0);
  // inverse standard normal through erfc
  if (u <= 0.0) return floor_;
  if (u >= 1.0) return cap_;
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double p = 0.5 * std::erfc(-mid / std::numbers::sqrt2);
    (p < u ? lo : hi) = mid;
  }
  return at_shock(0.5 * (lo + hi));
}

double WageDistribution::cdf(double wage) const {
  if (wage < floor_) return 0.0;
  if (wage >= cap_) return 1.0;
  if (degenerate()) return wage >= at_shock(0.0) ? 1.0 : 0.0;
  const double z = (std::log(wage) - log_mean_) / log_sd_;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

WageDistribution next_wage_distribution(Employment during_year, double wage, int next_age,
                                        const WageProcessParams& w) {
  return {next_log_wage_mean(during_year, wage, next_age, w), w.sigma, w.wage_floor, w.wage_cap};
}

WageDistribution initial_wage_distribution(const ModelParams& m) {
  return {m.wage.age_profile(m.start_age), m.wage.initial_sigma, m.wage.wage_floor, m.wage.wage_cap};
}

AgentState year_state(const AgentState& s, Action a, const ModelParams& m) {
  AgentState y = s;
  Employment next = s.employment;
  if (a == Action::Switch) {
    next = s.employment == Employment::Employed ? Employment::Unemployed : Employment::Employed;
  } else if (a == Action::Retire) {
    next = Employment::Retired;
  }
  if (next != s.employment)
    y.time_in_state = 0;
  else
    y.time_in_state = std::min(s.time_in_state + 1, m.tis_cap);
  y.employment = next;
  return y;
}

AgentState advance(const AgentState& during, double next_pension, double wage_draw, const ModelParams& m) {
  AgentState next = during;
  next.age = during.age + 1;
  next.pension = next_pension;
  if (during.employment == Employment::Employed) next.prev_wage = during.wage;
  next.wage = m.wage.clamp(wage_draw);
  return next;
}

StepResult step(const AgentState& s, Action a, double wage_draw, const ModelParams& m,
                const FiscalRules& rules) {
  if (!feasible_actions(s, m).contains(a))
    throw ModelError(std::string("step: infeasible action ") + to_string(a) + " for " +
                     to_string(s.employment) + " agent at age " + std::to_string(s.age));
  StepResult out;
  out.during = year_state(s, a, m);
  out.net_income = net_income(out.during, rules);
  out.reward = reward(out.during.employment, out.net_income, m.reward);
  out.next = advance(out.during, s.pension + accrue_pension(out.during, rules), wage_draw, m);
  return out;
}

double retiree_net_income(double pension, const FiscalRules& rules) {
  AgentState r;
  r.employment = Employment::Retired;
  r.pension = pension;
  return net_income(r, rules);
}

double terminal_value(const AgentState& s, const ModelParams& m, const FiscalRules& rules) {
  const double per_year = reward(Employment::Retired, retiree_net_income(s.pension, rules), m.reward);
  const auto survival = m.terminal.survival_curve(m.end_age);
  double weight = 0.0, discount = 1.0;
  for (double sk : survival) {
    weight += sk * discount;
    discount *= m.reward.gamma;
  }
  return weight * per_year;
}

}  // namespace lcm
