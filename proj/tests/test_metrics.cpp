#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lcm/metrics.hpp"
#include "oracles.hpp"

using namespace lcm;
using testing::random_path;

namespace {

Trajectory constant_path(std::size_t n, Employment e, double income, const RewardParams& p, double tv = 0.0) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) {
    TrajectoryRecord r;
    r.state.employment = e;
    r.state.age = 18 + static_cast<int>(i);
    r.worked = e == Employment::Employed;
    r.net_income = income;
    r.utility = unscaled_utility(e, income, p);
    r.reward = reward(e, income, p);
    t.records.push_back(r);
  }
  t.terminal_value = tv;
  return t;
}

// Direct double sum over start periods s < T of the discounted remainder.
double time_avg_oracle(const Trajectory& t, double gamma) {
  const std::size_t T = t.records.size() - 1;
  double total = 0.0;
  for (std::size_t s = 0; s < T; ++s) {
    double g = 0.0;
    for (std::size_t k = s; k <= T; ++k) g += std::pow(gamma, static_cast<double>(k - s)) * t.records[k].reward;
    g += std::pow(gamma, static_cast<double>(T - s)) * t.terminal_value;
    total += g;
  }
  return total / static_cast<double>(T);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("initial discounted utility of a constant reward is a geometric sum") {
    RewardParams p;
    const Trajectory t = constant_path(53, Employment::Employed, 25000.0, p);
    const double r = t.records[0].reward;
    const double g = p.gamma;
    std::vector<Trajectory> pop{t};
    CHECK(initial_discounted_utility(pop, g) == doctest::Approx(r * (1 - std::pow(g, 53)) / (1 - g)).epsilon(1e-13));
  }

  TEST_CASE("terminal value is discounted to the last record") {
    RewardParams p;
    const Trajectory t = constant_path(3, Employment::Retired, 9000.0, p, 2.5);
    const double r = t.records[0].reward, g = p.gamma;
    std::vector<Trajectory> pop{t};
    CHECK(initial_discounted_utility(pop, g) == doctest::Approx(r + g * r + g * g * (r + 2.5)).epsilon(1e-14));
    CHECK(discounted_return(t, g, 2) == doctest::Approx(r + 2.5));
  }

  TEST_CASE("zero discounting keeps the first reward") {
    RewardParams p;
    p.gamma = 0.0;
    std::mt19937_64 rng(1);
    std::vector<Trajectory> pop;
    double first = 0.0, per_period = 0.0;
    for (int i = 0; i < 20; ++i) {
      pop.push_back(random_path(rng, 10, p));
      first += pop.back().records[0].reward;
      for (std::size_t s = 0; s + 1 < 10; ++s) per_period += pop.back().records[s].reward;
    }
    CHECK(initial_discounted_utility(pop, 0.0) == doctest::Approx(first / 20));
    CHECK(time_avg_discounted_utility(pop, 0.0) == doctest::Approx(per_period / (20 * 9)));
  }

  TEST_CASE("time-averaged utility matches the direct double sum") {
    RewardParams p;
    std::mt19937_64 rng(2);
    for (double g : {0.5, 0.92, 0.999}) {
      std::vector<Trajectory> pop;
      double oracle = 0.0;
      for (int i = 0; i < 15; ++i) {
        pop.push_back(random_path(rng, 53, p));
        oracle += time_avg_oracle(pop.back(), g);
      }
      CHECK(time_avg_discounted_utility(pop, g) == doctest::Approx(oracle / 15).epsilon(1e-12));
    }
  }

  TEST_CASE("one step horizon makes both utilities agree") {
    RewardParams p;
    std::mt19937_64 rng(3);
    std::vector<Trajectory> pop;
    for (int i = 0; i < 10; ++i) pop.push_back(random_path(rng, 2, p));
    CHECK(time_avg_discounted_utility(pop, p.gamma) == doctest::Approx(initial_discounted_utility(pop, p.gamma)));
  }

  TEST_CASE("equivalent net income") {
    RewardParams p;
    const double n = 20000.0;
    std::vector<Trajectory> u{constant_path(53, Employment::Unemployed, n, p)};
    std::vector<Trajectory> e{constant_path(53, Employment::Employed, n, p)};
    CHECK(equivalent_net_income(u) == doctest::Approx(n).epsilon(1e-12));
    CHECK(equivalent_net_income(e) == doctest::Approx(n * std::exp(-0.75)).epsilon(1e-12));
    std::vector<Trajectory> half{constant_path(10, Employment::Unemployed, n, p),
                                 constant_path(10, Employment::Employed, n, p)};
    CHECK(equivalent_net_income(half) == doctest::Approx(n * (1 + std::exp(-0.75)) / 2).epsilon(1e-12));
  }

  TEST_CASE("equivalent net income scales with incomes") {
    RewardParams p;
    std::mt19937_64 rng(4);
    std::vector<Trajectory> pop, doubled;
    for (int i = 0; i < 10; ++i) {
      pop.push_back(random_path(rng, 20, p));
      Trajectory d = pop.back();
      for (auto& r : d.records) {
        r.net_income *= 2.0;
        r.utility = unscaled_utility(r.state.employment, r.net_income, p);
      }
      doubled.push_back(d);
    }
    CHECK(equivalent_net_income(doubled) == doctest::Approx(2.0 * equivalent_net_income(pop)).epsilon(1e-12));
  }

  TEST_CASE("employment person-years") {
    RewardParams p;
    std::vector<Trajectory> all(7, constant_path(53, Employment::Employed, 20000.0, p));
    CHECK(employment_person_years(all) == 53 * 7);
    CHECK(employment_person_years(all, 100000) == doctest::Approx(53.0 * 100000));
    std::vector<Trajectory> none(4, constant_path(53, Employment::Unemployed, 9000.0, p));
    CHECK(employment_person_years(none) == 0);
    std::mt19937_64 rng(5);
    std::vector<Trajectory> mixed;
    long count = 0;
    for (int i = 0; i < 30; ++i) {
      mixed.push_back(random_path(rng, 53, p));
      for (const auto& r : mixed.back().records) count += r.state.employment == Employment::Employed;
    }
    CHECK(employment_person_years(mixed) == count);
  }

  TEST_CASE("compensating consumption on means") {
    const double D = discount_sum(53, 0.92);
    CHECK(D == doctest::Approx((1 - std::pow(0.92, 53)) / 0.08).epsilon(1e-13));
    CHECK(std::abs(compensating_consumption(10.0, 10.0, D)) < 1e-9);
    const double alt = 100.0, ref = alt + D * std::log(1.01);
    CHECK(std::abs(compensating_consumption(ref, alt, D) - 1.0) < 1e-6);
    CHECK(std::abs(compensating_consumption_closed_form(ref, alt, D) - 1.0) < 1e-9);
    CHECK_THROWS_AS(compensating_consumption(alt + 10 * D, alt, D), MetricsError);
    CHECK_THROWS_AS(compensating_consumption(alt - 10 * D, alt, D), MetricsError);
  }

  TEST_CASE("bisection and closed form agree on random populations") {
    RewardParams p;
    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
      std::vector<Trajectory> a, b;
      for (int i = 0; i < 8; ++i) {
        a.push_back(random_path(rng, 12, p));
        b.push_back(random_path(rng, 12, p));
      }
      const double x = compensating_consumption(a, b, p.gamma);
      const double y = compensating_consumption_closed_form(a, b, p.gamma);
      CHECK(std::abs(x - y) < 1e-8);
    }
  }

  TEST_CASE("constructed one percent population") {
    RewardParams p;
    std::mt19937_64 rng(7);
    std::vector<Trajectory> alt, ref;
    for (int i = 0; i < 25; ++i) {
      alt.push_back(random_path(rng, 53, p));
      Trajectory r = alt.back();
      for (auto& rec : r.records) {
        rec.net_income *= 1.01;
        rec.utility = unscaled_utility(rec.state.employment, rec.net_income, p);
      }
      ref.push_back(r);
    }
    CHECK(std::abs(compensating_consumption(ref, alt, p.gamma) - 1.0) < 1e-6);
    CHECK(std::abs(compensating_consumption(alt, alt, p.gamma)) < 1e-9);
  }

  TEST_CASE("better reference population needs positive compensation") {
    RewardParams p;
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      std::vector<Trajectory> a, b;
      for (int i = 0; i < 5; ++i) {
        a.push_back(random_path(rng, 15, p));
        b.push_back(random_path(rng, 15, p));
      }
      double ua = 0.0, ub = 0.0;
      for (int i = 0; i < 5; ++i) {
        ua += discounted_unscaled_utility(a[i], p.gamma);
        ub += discounted_unscaled_utility(b[i], p.gamma);
      }
      const double x = compensating_consumption(a, b, p.gamma);
      CHECK((ua > ub) == (x > 0.0));
    }
  }

  TEST_CASE("stat block agrees with the individual statistics") {
    RewardParams p;
    std::mt19937_64 rng(9);
    std::vector<Trajectory> pop;
    for (int i = 0; i < 40; ++i) pop.push_back(random_path(rng, 53, p));
    const StatBlock s = stat_block(pop, p, 100000);
    CHECK(s.initial_discounted_utility == doctest::Approx(initial_discounted_utility(pop, p.gamma)).epsilon(1e-13));
    CHECK(s.time_avg_discounted_utility == doctest::Approx(time_avg_discounted_utility(pop, p.gamma)).epsilon(1e-13));
    CHECK(s.equivalent_net_income == doctest::Approx(equivalent_net_income(pop)).epsilon(1e-13));
    CHECK(s.employment_person_years == doctest::Approx(employment_person_years(pop, 100000)));
    CHECK(s.discount_sum == doctest::Approx(discount_sum(53, p.gamma)));
    CHECK_FALSE(s.compensating_consumption_pct.has_value());
  }

  TEST_CASE("empty and ragged populations are rejected") {
    RewardParams p;
    std::vector<Trajectory> none;
    CHECK_THROWS_AS(initial_discounted_utility(none, 0.9), MetricsError);
    CHECK_THROWS_AS(equivalent_net_income(none), MetricsError);
    std::vector<Trajectory> a{constant_path(5, Employment::Employed, 20000.0, p)};
    std::vector<Trajectory> b{constant_path(6, Employment::Employed, 20000.0, p)};
    CHECK_THROWS_AS(compensating_consumption(a, b, 0.9), MetricsError);
  }
}
