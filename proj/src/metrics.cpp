#include "lcm/metrics.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace lcm {

namespace {

constexpr double kLow = -0.99;
constexpr double kHigh = 10.0;

void require_nonempty(std::span<const Trajectory> trajs, const char* what) {
  if (trajs.empty()) throw MetricsError(std::string(what) + ": empty population");
}

double bisect(const std::function<double(double)>& f) {
  double lo = kLow, hi = kHigh;
  const double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) {
    std::ostringstream msg;
    msg << "compensating consumption: no root in (" << kLow << ", " << kHigh << "), residuals " << flo << " and "
        << fhi;
    throw MetricsError(msg.str());
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double discounted_return(const Trajectory& t, double gamma, std::size_t from) {
  const std::size_t n = t.records.size();
  if (from >= n) return t.terminal_value;
  // terminal_value is already discounted to the last record's age
  double g = t.records[n - 1].reward + t.terminal_value;
  for (std::size_t i = n - 1; i-- > from;) g = t.records[i].reward + gamma * g;
  return g;
}

double discounted_unscaled_utility(const Trajectory& t, double beta) {
  double sum = 0.0, d = 1.0;
  for (const auto& r : t.records) {
    sum += d * r.utility;
    d *= beta;
  }
  return sum;
}

double discount_sum(std::size_t periods, double beta) {
  double sum = 0.0, d = 1.0;
  for (std::size_t t = 0; t < periods; ++t) {
    sum += d;
    d *= beta;
  }
  return sum;
}

double initial_discounted_utility(std::span<const Trajectory> trajs, double gamma) {
  require_nonempty(trajs, "initial_discounted_utility");
  double sum = 0.0;
  for (const auto& t : trajs) sum += discounted_return(t, gamma);
  return sum / static_cast<double>(trajs.size());
}

namespace {

double agent_time_avg(const Trajectory& t, double gamma) {
  const std::size_t n = t.records.size();
  if (n == 0) return t.terminal_value;
  if (n == 1) return t.records[0].reward + t.terminal_value;
  // G_s over s = T..0 with T = n - 1; the average runs over s < T
  double g = t.records[n - 1].reward + t.terminal_value;
  double sum = 0.0;
  for (std::size_t s = n - 1; s-- > 0;) {
    g = t.records[s].reward + gamma * g;
    sum += g;
  }
  return sum / static_cast<double>(n - 1);
}

double agent_equivalent_income(const Trajectory& t) {
  double sum = 0.0;
  for (const auto& r : t.records) sum += std::exp(r.utility);
  return sum;
}

long agent_employed_years(const Trajectory& t) {
  long n = 0;
  for (const auto& r : t.records) n += r.state.employment == Employment::Employed;
  return n;
}

}  // namespace

double time_avg_discounted_utility(std::span<const Trajectory> trajs, double gamma) {
  require_nonempty(trajs, "time_avg_discounted_utility");
  double sum = 0.0;
  for (const auto& t : trajs) sum += agent_time_avg(t, gamma);
  return sum / static_cast<double>(trajs.size());
}

double equivalent_net_income(std::span<const Trajectory> trajs) {
  require_nonempty(trajs, "equivalent_net_income");
  double sum = 0.0;
  long periods = 0;
  for (const auto& t : trajs) {
    sum += agent_equivalent_income(t);
    periods += static_cast<long>(t.records.size());
  }
  return sum / static_cast<double>(periods);
}

double employment_person_years(std::span<const Trajectory> trajs, long scale_to) {
  require_nonempty(trajs, "employment_person_years");
  long years = 0;
  for (const auto& t : trajs) years += agent_employed_years(t);
  if (scale_to <= 0) return static_cast<double>(years);
  return static_cast<double>(years) * static_cast<double>(scale_to) / static_cast<double>(trajs.size());
}

double compensating_consumption(double mean_ref, double mean_alt, double d) {
  return 100.0 * bisect([&](double x) { return mean_alt + d * std::log1p(x) - mean_ref; });
}

double compensating_consumption_closed_form(double mean_ref, double mean_alt, double d) {
  return 100.0 * std::expm1((mean_ref - mean_alt) / d);
}

namespace {

double mean_discounted_unscaled(std::span<const Trajectory> trajs, double beta) {
  double sum = 0.0;
  for (const auto& t : trajs) sum += discounted_unscaled_utility(t, beta);
  return sum / static_cast<double>(trajs.size());
}

std::size_t common_length(std::span<const Trajectory> ref, std::span<const Trajectory> alt) {
  require_nonempty(ref, "compensating_consumption");
  require_nonempty(alt, "compensating_consumption");
  const std::size_t n = ref.front().records.size();
  for (auto pop : {ref, alt})
    for (const auto& t : pop)
      if (t.records.size() != n) throw MetricsError("compensating consumption: trajectories differ in length");
  return n;
}

}  // namespace

double compensating_consumption(std::span<const Trajectory> ref, std::span<const Trajectory> alt, double beta) {
  common_length(ref, alt);
  const double target = mean_discounted_unscaled(ref, beta);
  const auto alt_utility = [&](double x) {
    double sum = 0.0;
    for (const auto& t : alt) {
      double d = 1.0;
      for (const auto& r : t.records) {
        const double leisure_cost = std::log(r.net_income) - r.utility;
        sum += d * (std::log((1.0 + x) * r.net_income) - leisure_cost);
        d *= beta;
      }
    }
    return sum / static_cast<double>(alt.size());
  };
  return 100.0 * bisect([&](double x) { return alt_utility(x) - target; });
}

double compensating_consumption_closed_form(std::span<const Trajectory> ref, std::span<const Trajectory> alt,
                                            double beta) {
  const std::size_t n = common_length(ref, alt);
  return compensating_consumption_closed_form(mean_discounted_unscaled(ref, beta), mean_discounted_unscaled(alt, beta),
                                              discount_sum(n, beta));
}

void PopulationTotals::add(const Trajectory& t, const RewardParams& p) {
  if (agents == 0)
    records_per_agent = t.records.size();
  else if (t.records.size() != records_per_agent)
    throw MetricsError("population totals: trajectories differ in length");
  ++agents;
  periods += static_cast<long>(t.records.size());
  employed_years += agent_employed_years(t);
  discounted_utility += discounted_return(t, p.gamma);
  time_avg_utility += agent_time_avg(t, p.gamma);
  discounted_unscaled_utility += lcm::discounted_unscaled_utility(t, p.gamma);
  equivalent_income += agent_equivalent_income(t);
}

void PopulationTotals::merge(const PopulationTotals& o) {
  if (o.agents == 0) return;
  if (agents == 0) {
    *this = o;
    return;
  }
  if (o.records_per_agent != records_per_agent) throw MetricsError("population totals: horizons differ");
  agents += o.agents;
  periods += o.periods;
  employed_years += o.employed_years;
  discounted_utility += o.discounted_utility;
  time_avg_utility += o.time_avg_utility;
  discounted_unscaled_utility += o.discounted_unscaled_utility;
  equivalent_income += o.equivalent_income;
}

StatBlock PopulationTotals::stats(double beta, long scale_to) const {
  if (agents == 0) throw MetricsError("population totals: no agents");
  const double n = static_cast<double>(agents);
  StatBlock s;
  s.initial_discounted_utility = discounted_utility / n;
  s.time_avg_discounted_utility = time_avg_utility / n;
  s.equivalent_net_income = equivalent_income / static_cast<double>(periods);
  s.employment_person_years =
      scale_to > 0 ? static_cast<double>(employed_years) * static_cast<double>(scale_to) / n : employed_years;
  s.mean_discounted_unscaled_utility = discounted_unscaled_utility / n;
  s.discount_sum = discount_sum(records_per_agent, beta);
  return s;
}

StatBlock stat_block(std::span<const Trajectory> trajs, const RewardParams& p, long scale_to) {
  require_nonempty(trajs, "stat_block");
  PopulationTotals totals;
  for (const auto& t : trajs) totals.add(t, p);
  return totals.stats(p.gamma, scale_to);
}

}  // namespace lcm
