#pragma once

// Life-cycle labor-supply decision process: states, actions, wage dynamics,
// per-period reward and the post-horizon pension valuation. Nothing in here
// knows about a particular solver.

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcm {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Codes match the one-hot order used by the RL encoder.
enum class Employment : std::uint8_t { Unemployed = 0, Employed = 1, Retired = 2 };
enum class Action : std::uint8_t { Stay = 0, Switch = 1, Retire = 2 };

inline constexpr int kEmploymentCount = 3;
inline constexpr int kActionCount = 3;

const char* to_string(Employment e);
const char* to_string(Action a);

struct AgentState {
  Employment employment = Employment::Unemployed;
  int age = 18;
  double pension = 0.0;    // accrued annual pension entitlement, e/y
  double prev_wage = 0.0;  // wage of the last employed year, e/y
  int time_in_state = 0;   // years since the last employment transition
  double wage = 0.0;       // current wage or wage offer, e/y

  bool operator==(const AgentState&) const = default;
};

struct RewardParams {
  double kappa = 0.75;
  double gamma = 0.92;
  double reward_scale = 10.0;
};

struct WageProcessParams {
  double rho = 0.89;
  double sigma = 0.20;
  // mean log wage: intercept + slope*(age-18) + curvature*(age-18)^2
  double profile_intercept = 10.23995887281157;  // ln(28000)
  double profile_slope = 0.035;
  double profile_curvature = -0.0006;
  double unemployment_penalty = 0.95;
  double wage_floor = 1000.0;
  double wage_cap = 350000.0;
  // std. dev. of log wage at labor-market entry
  double initial_sigma = 0.20;

  double age_profile(int age) const {
    const double x = age - 18.0;
    return profile_intercept + profile_slope * x + profile_curvature * x * x;
  }
  double clamp(double w) const;
};

struct TerminalParams {
  int max_age = 100;
  // Gompertz hazard h(a) = hazard_scale * exp(hazard_growth * (a - 70))
  double hazard_scale = 0.0009;
  double hazard_growth = 0.085;
  // survival[k] = P(alive at 70+k | alive at 70); empty means derive from hazard
  std::vector<double> survival;

  std::vector<double> survival_curve(int horizon_end) const;
};

struct FiscalRules;

struct ModelParams {
  RewardParams reward;
  WageProcessParams wage;
  TerminalParams terminal;
  double min_retirement_age = 63.5;
  int tis_cap = 10;
  int start_age = 18;
  int end_age = 70;

  // First age at which Retire may be chosen.
  int feasible_retirement_age() const;
  int decision_count() const { return end_age - start_age; }
  int record_count() const { return end_age - start_age + 1; }
};

// Fixed-size feasible-action set; order is always Stay, Switch, Retire.
struct ActionSet {
  std::array<Action, kActionCount> items{};
  int size = 0;

  bool contains(Action a) const {
    for (int i = 0; i < size; ++i)
      if (items[i] == a) return true;
    return false;
  }
  const Action* begin() const { return items.data(); }
  const Action* end() const { return items.data() + size; }
};

ActionSet feasible_actions(const AgentState& s, const ModelParams& m);

// (ln(n) - kappa*[employed]) / reward_scale. Throws on n <= 0.
double reward(Employment during_year, double net_income, const RewardParams& p);
double unscaled_utility(Employment during_year, double net_income, const RewardParams& p);

// Deterministic part of the next log wage (before the shock).
double next_log_wage_mean(Employment during_year, double wage, int next_age, const WageProcessParams& w);

class WageDistribution {
 public:
  WageDistribution(double log_mean, double log_sd, double floor, double cap)
      : log_mean_(log_mean), log_sd_(log_sd), floor_(floor), cap_(cap) {}

  double log_mean() const { return log_mean_; }
  double log_sd() const { return log_sd_; }
  double floor() const { return floor_; }
  double cap() const { return cap_; }

  // Clamped wage at standard-normal quantile z.
  double at_shock(double z) const;
  double quantile(double u) const;
  double cdf(double wage) const;
  bool degenerate() const { return log_sd_ == 0.0; }

  template <class Rng>
  double sample(Rng& rng) const {
    if (degenerate()) return at_shock(0.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    return at_shock(n01(rng));
  }

 private:
  double log_mean_;
  double log_sd_;
  double floor_;
  double cap_;
};

// Wage offer for next_age given the employment held during the elapsed year.
WageDistribution next_wage_distribution(Employment during_year, double wage, int next_age,
                                        const WageProcessParams& w);
WageDistribution initial_wage_distribution(const ModelParams& m);

// State occupied during the year that follows action a (employment, tis updated;
// age, wage, pension and prev_wage still those at the decision).
AgentState year_state(const AgentState& s, Action a, const ModelParams& m);

struct StepResult {
  AgentState next;
  AgentState during;  // state held during the elapsed year
  double net_income = 0.0;
  double reward = 0.0;
};

StepResult step(const AgentState& s, Action a, double wage_draw, const ModelParams& m,
                const FiscalRules& rules);

// step() with the next wage drawn from the offer distribution implied by the
// year state.
template <class Rng>
StepResult sample_step(const AgentState& s, Action a, Rng& rng, const ModelParams& m, const FiscalRules& rules) {
  const AgentState during = year_state(s, a, m);
  const double draw = next_wage_distribution(during.employment, s.wage, s.age + 1, m.wage).sample(rng);
  return step(s, a, draw, m, rules);
}

// Labor-market entrant: Unemployed at start_age with a wage offer drawn from
// the entry distribution.
template <class Rng>
AgentState initial_state(const ModelParams& m, Rng& rng) {
  AgentState s;
  s.age = m.start_age;
  s.wage = initial_wage_distribution(m).sample(rng);
  return s;
}

// Next state given the year state and the realised wage draw (no fiscal call).
AgentState advance(const AgentState& during, double next_pension, double wage_draw,
                   const ModelParams& m);

// Full post-horizon value at end_age, scaled like per-period rewards. The k = 0
// term is the end-age year itself.
double terminal_value(const AgentState& s, const ModelParams& m, const FiscalRules& rules);
// Net income a retiree with this accrued pension receives.
double retiree_net_income(double pension, const FiscalRules& rules);

void validate(const ModelParams& m);
void validate(const AgentState& s, const ModelParams& m);

}  // namespace lcm
