#include <cmath>
#include <random>

#include "doctest.h"
#include "lcm/fiscal.hpp"
#include "lcm/model.hpp"
#include "lcm/rng.hpp"

using namespace lcm;

namespace {

AgentState make(Employment e, int age, double pension = 0.0, double prev = 0.0, int tis = 0, double wage = 30000.0) {
  AgentState s;
  s.employment = e;
  s.age = age;
  s.pension = pension;
  s.prev_wage = prev;
  s.time_in_state = tis;
  s.wage = wage;
  return s;
}

bool same_set(const ActionSet& a, std::initializer_list<Action> b) {
  if (a.size != static_cast<int>(b.size())) return false;
  for (Action x : b)
    if (!a.contains(x)) return false;
  return true;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("feasible actions follow employment and the retirement threshold") {
    ModelParams m;
    CHECK(same_set(feasible_actions(make(Employment::Employed, 40), m), {Action::Stay, Action::Switch}));
    CHECK(same_set(feasible_actions(make(Employment::Retired, 65), m), {Action::Stay}));
    CHECK(same_set(feasible_actions(make(Employment::Unemployed, 64), m),
                   {Action::Stay, Action::Switch, Action::Retire}));
    CHECK(same_set(feasible_actions(make(Employment::Unemployed, 63), m), {Action::Stay, Action::Switch}));
    m.min_retirement_age = 66;
    CHECK(m.feasible_retirement_age() == 66);
    CHECK_FALSE(feasible_actions(make(Employment::Employed, 65), m).contains(Action::Retire));
    CHECK(feasible_actions(make(Employment::Employed, 66), m).contains(Action::Retire));
  }

  TEST_CASE("utility of 1800 e/month employed matches 850 e/month unemployed") {
    RewardParams p;
    const double employed = unscaled_utility(Employment::Employed, 21600.0, p);
    const double unemployed = unscaled_utility(Employment::Unemployed, 10200.0, p);
    CHECK(employed == doctest::Approx(9.2305).epsilon(1e-5));
    CHECK(unemployed == doctest::Approx(9.2301).epsilon(1e-5));
    CHECK(std::abs(employed - unemployed) < 0.002);
  }

  TEST_CASE("reward scaling and log utility") {
    RewardParams p;
    CHECK(unscaled_utility(Employment::Unemployed, 1.0, p) == 0.0);
    CHECK(reward(Employment::Employed, std::exp(10.0), p) == doctest::Approx(0.925).epsilon(1e-12));
    CHECK_THROWS_AS(reward(Employment::Employed, 0.0, p), ModelError);
    CHECK_THROWS_AS(reward(Employment::Employed, -5.0, p), ModelError);
  }

  TEST_CASE("employed utility equals unemployed utility at income scaled by exp(-kappa)") {
    RewardParams p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1.0, 12.0);
    for (int i = 0; i < 200; ++i) {
      const double n = std::exp(u(rng));
      CHECK(std::abs(unscaled_utility(Employment::Employed, n, p) -
                     unscaled_utility(Employment::Unemployed, n * std::exp(-p.kappa), p)) < 1e-12);
    }
  }

  TEST_CASE("degenerate wage process") {
    WageProcessParams w;
    w.sigma = 0.0;
    w.rho = 1.0;
    const auto employed = next_wage_distribution(Employment::Employed, 30000.0, 41, w);
    CHECK(employed.degenerate());
    CHECK(employed.at_shock(0.0) == doctest::Approx(30000.0).epsilon(1e-12));
    const auto unemployed = next_wage_distribution(Employment::Unemployed, 30000.0, 41, w);
    CHECK(unemployed.at_shock(0.0) == doctest::Approx(28500.0).epsilon(1e-12));
    const auto floored = next_wage_distribution(Employment::Employed, 500.0, 41, w);
    CHECK(floored.at_shock(0.0) == w.wage_floor);
  }

  TEST_CASE("wage distribution quantile inverts cdf and samples stay in bounds") {
    WageProcessParams w;
    const auto d = next_wage_distribution(Employment::Employed, 35000.0, 40, w);
    for (double u : {0.01, 0.2, 0.5, 0.8, 0.99}) CHECK(d.cdf(d.quantile(u)) == doctest::Approx(u).epsilon(1e-9));
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const double x = d.sample(rng);
      CHECK(x >= w.wage_floor);
      CHECK(x <= w.wage_cap);
    }
  }

  TEST_CASE("step transitions") {
    ModelParams m;
    FiscalRules f;
    const auto stay = step(make(Employment::Employed, 40, 1000, 25000, 3), Action::Stay, 31000.0, m, f);
    CHECK(stay.next.employment == Employment::Employed);
    CHECK(stay.next.age == 41);
    CHECK(stay.next.time_in_state == 4);
    CHECK(stay.next.prev_wage == 30000.0);
    CHECK(stay.next.wage == 31000.0);
    CHECK(stay.next.pension == doctest::Approx(1000 + 450.0));

    const auto quit = step(make(Employment::Employed, 40, 1000, 25000, 3), Action::Switch, 28500.0, m, f);
    CHECK(quit.next.employment == Employment::Unemployed);
    CHECK(quit.next.age == 41);
    CHECK(quit.next.time_in_state == 0);
    CHECK(quit.next.prev_wage == 25000.0);  // the year was spent unemployed

    const auto retire = step(make(Employment::Unemployed, 64, 12000, 30000, 5), Action::Retire, 20000.0, m, f);
    CHECK(retire.next.employment == Employment::Retired);
    CHECK(retire.next.age == 65);
    CHECK(retire.next.time_in_state == 0);
    CHECK(retire.net_income == doctest::Approx(net_income(retire.during, f)));
    CHECK(retire.during.employment == Employment::Retired);
    CHECK(retire.next.pension == 12000.0);

    CHECK_THROWS_AS(step(make(Employment::Employed, 40), Action::Retire, 30000.0, m, f), ModelError);
    CHECK_THROWS_AS(step(make(Employment::Retired, 66), Action::Switch, 30000.0, m, f), ModelError);
  }

  TEST_CASE("time in state is capped") {
    ModelParams m;
    FiscalRules f;
    const auto r = step(make(Employment::Employed, 40, 0, 0, m.tis_cap), Action::Stay, 30000.0, m, f);
    CHECK(r.next.time_in_state == m.tis_cap);
  }

  TEST_CASE("terminal value") {
    ModelParams m;
    FiscalRules f;
    AgentState s = make(Employment::Retired, 70, 15000.0);
    const double r = reward(Employment::Retired, retiree_net_income(15000.0, f), m.reward);

    SUBCASE("immediate death leaves one retired year") {
      m.terminal.survival.assign(static_cast<std::size_t>(m.terminal.max_age - 70 + 1), 0.0);
      m.terminal.survival[0] = 1.0;
      CHECK(terminal_value(s, m, f) == doctest::Approx(r).epsilon(1e-14));
    }
    SUBCASE("certain survival gives the geometric sum") {
      const int K = m.terminal.max_age - 70;
      m.terminal.survival.assign(static_cast<std::size_t>(K + 1), 1.0);
      const double g = m.reward.gamma;
      CHECK(terminal_value(s, m, f) == doctest::Approx(r * (1 - std::pow(g, K + 1)) / (1 - g)).epsilon(1e-12));
    }
    SUBCASE("no accrued pension values the guarantee pension") {
      s.pension = 0.0;
      const auto surv = m.terminal.survival_curve(70);
      double w = 0.0, d = 1.0;
      for (double x : surv) {
        w += x * d;
        d *= m.reward.gamma;
      }
      // guarantee 8000 lies below the first taxed bracket and above the floor
      CHECK(terminal_value(s, m, f) == doctest::Approx(w * std::log(8000.0) / 10.0).epsilon(1e-12));
    }
  }

  TEST_CASE("default survival curve is a declining Gompertz curve") {
    TerminalParams t;
    const auto s = t.survival_curve(70);
    REQUIRE(s.size() == 31);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == doctest::Approx(std::exp(-0.0009)));
    for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k] < s[k - 1]);
  }

  TEST_CASE("always-employed wage stays constant without shocks") {
    ModelParams m;
    m.wage.sigma = 0.0;
    m.wage.rho = 1.0;
    FiscalRules f;
    Rng rng(5);
    AgentState s = make(Employment::Employed, 30, 0, 0, 0, 41234.5);
    for (int a = 30; a < 60; ++a) {
      const auto r = sample_step(s, Action::Stay, rng, m, f);
      CHECK(r.next.wage == doctest::Approx(41234.5).epsilon(1e-12));
      s = r.next;
    }
  }

  TEST_CASE("validation rejects bad parameters and states") {
    ModelParams m;
    CHECK_NOTHROW(validate(m));
    m.reward.gamma = 1.0;
    CHECK_THROWS_AS(validate(m), ModelError);
    m = ModelParams{};
    m.wage.unemployment_penalty = 0.0;
    CHECK_THROWS_AS(validate(m), ModelError);
    m = ModelParams{};
    m.terminal.survival = {0.9};
    CHECK_THROWS_AS(validate(m), ModelError);
    m = ModelParams{};
    CHECK_THROWS_AS(validate(make(Employment::Employed, 17), m), ModelError);
    CHECK_THROWS_AS(validate(make(Employment::Employed, 40, -1.0), m), ModelError);
    CHECK_THROWS_AS(validate(make(Employment::Employed, 40, 0, 0, 0, 10.0), m), ModelError);
  }
}
