#pragma once

// Population statistics over simulated trajectories.

#include <optional>
#include <span>

#include "lcm/trajectory.hpp"

namespace lcm {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StatBlock {
  double initial_discounted_utility = 0.0;
  double time_avg_discounted_utility = 0.0;
  double equivalent_net_income = 0.0;
  double employment_person_years = 0.0;  // rescaled to the reporting population
  std::optional<double> compensating_consumption_pct;
  // Inputs of the compensating-consumption equation: mean in-horizon discounted
  // unscaled utility and the discount sum over the horizon.
  double mean_discounted_unscaled_utility = 0.0;
  double discount_sum = 0.0;
};

// Per-agent discounted return from record s onwards, terminal value included.
double discounted_return(const Trajectory& t, double gamma, std::size_t from = 0);
// sum_t beta^t * u_t over the records (unscaled, no terminal value).
double discounted_unscaled_utility(const Trajectory& t, double beta);
// sum_{t=1}^{periods} beta^(t-1)
double discount_sum(std::size_t periods, double beta);

double initial_discounted_utility(std::span<const Trajectory> trajs, double gamma);
double time_avg_discounted_utility(std::span<const Trajectory> trajs, double gamma);
double equivalent_net_income(std::span<const Trajectory> trajs);
// Decision-time Employed records, rescaled to scale_to agents (0 = no rescale).
double employment_person_years(std::span<const Trajectory> trajs, long scale_to = 0);

// Percent x with mean_ref = mean_alt + D*ln(1+x), solved by bisection on
// (-0.99, 10). Throws MetricsError when no root lies in the bracket.
double compensating_consumption(double mean_ref, double mean_alt, double discount_sum);
double compensating_consumption_closed_form(double mean_ref, double mean_alt, double discount_sum);
// Same on populations: bisection on the scaled-consumption utilities of alt.
double compensating_consumption(std::span<const Trajectory> ref, std::span<const Trajectory> alt, double beta);
double compensating_consumption_closed_form(std::span<const Trajectory> ref, std::span<const Trajectory> alt,
                                            double beta);

// Additive per-agent sums; merging in a fixed order gives bit-stable totals.
struct PopulationTotals {
  long agents = 0;
  long employed_years = 0;
  long periods = 0;
  std::size_t records_per_agent = 0;
  double discounted_utility = 0.0;
  double time_avg_utility = 0.0;
  double discounted_unscaled_utility = 0.0;
  double equivalent_income = 0.0;

  void add(const Trajectory& t, const RewardParams& p);
  void merge(const PopulationTotals& o);
  StatBlock stats(double beta, long scale_to) const;
};

StatBlock stat_block(std::span<const Trajectory> trajs, const RewardParams& p, long scale_to);

}  // namespace lcm
