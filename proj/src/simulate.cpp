#include "lcm/simulate.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lcm/fiscal.hpp"
#include "lcm/rng.hpp"

namespace lcm {

namespace {

constexpr long kChunk = 512;

void check_hash(const Policy& policy, const ScenarioConfig& cfg) {
  const auto h = policy.config_hash();
  if (h && *h != cfg.hash())
    throw ModelError("policy was solved for config " + hash_hex(*h) + " but the scenario config is " +
                     hash_hex(cfg.hash()));
}

TrajectoryRecord make_record(const AgentState& s, Action a, const StepResult& r, const RewardParams& p) {
  TrajectoryRecord rec;
  rec.state = s;
  rec.action = a;
  rec.worked = r.during.employment == Employment::Employed;
  rec.net_income = r.net_income;
  rec.utility = unscaled_utility(r.during.employment, r.net_income, p);
  rec.reward = r.reward;
  return rec;
}

// Forced retirement year at end_age plus the post-horizon continuation.
void close_trajectory(Trajectory& t, const AgentState& s, const ScenarioConfig& cfg) {
  const ModelParams& m = cfg.model;
  TrajectoryRecord rec;
  rec.state = s;
  rec.action = s.employment == Employment::Retired ? Action::Stay : Action::Retire;
  rec.worked = false;
  rec.net_income = retiree_net_income(s.pension, cfg.fiscal);
  rec.utility = unscaled_utility(Employment::Retired, rec.net_income, m.reward);
  rec.reward = reward(Employment::Retired, rec.net_income, m.reward);
  t.records.push_back(rec);
  t.terminal_value = terminal_value(s, m, cfg.fiscal) - rec.reward;
}

struct AgeSums {
  std::vector<long> counts;  // [age][employment]
  std::vector<double> income;

  explicit AgeSums(std::size_t ages) : counts(ages * kEmploymentCount, 0), income(ages, 0.0) {}
  void add(const Trajectory& t) {
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      ++counts[i * kEmploymentCount + static_cast<int>(t.records[i].state.employment)];
      income[i] += t.records[i].net_income;
    }
  }
  void merge(const AgeSums& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    for (std::size_t i = 0; i < income.size(); ++i) income[i] += o.income[i];
  }
};

struct ChunkResult {
  std::vector<Trajectory> trajectories;
  AgeSums sums;
  PopulationTotals totals;
  explicit ChunkResult(std::size_t ages) : sums(ages) {}
};

void summarize_chunk(ChunkResult& c, const ScenarioConfig& cfg) {
  for (const auto& t : c.trajectories) {
    c.sums.add(t);
    c.totals.add(t, cfg.model.reward);
  }
}

ChunkResult simulate_chunk(const Policy& policy, const ScenarioConfig& cfg, const SimulationOptions& opt, long first,
                           long count) {
  const ModelParams& m = cfg.model;
  const std::size_t n = static_cast<std::size_t>(count);
  ChunkResult out(static_cast<std::size_t>(m.record_count()));
  std::vector<Rng> rngs(n);
  std::vector<AgentState> states(n);
  std::vector<Action> actions(n);
  out.trajectories.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rngs[i] = make_rng(opt.seed, opt.run_index, static_cast<std::uint64_t>(first) + i);
    states[i] = initial_state(m, rngs[i]);
    out.trajectories[i].records.reserve(static_cast<std::size_t>(m.record_count()));
  }
  for (int t = 0; t < m.decision_count(); ++t) {
    policy.act_batch(states, rngs, actions);
    for (std::size_t i = 0; i < n; ++i) {
      const StepResult r = sample_step(states[i], actions[i], rngs[i], m, cfg.fiscal);
      out.trajectories[i].records.push_back(make_record(states[i], actions[i], r, m.reward));
      states[i] = r.next;
    }
  }
  for (std::size_t i = 0; i < n; ++i) close_trajectory(out.trajectories[i], states[i], cfg);
  summarize_chunk(out, cfg);
  return out;
}

AggregateReport build_report(const AgeSums& sums, const PopulationTotals& totals, const ScenarioConfig& cfg) {
  AggregateReport r;
  r.population = totals.agents;
  const double n = static_cast<double>(totals.agents);
  for (std::size_t i = 0; i < sums.income.size(); ++i) {
    AgeAggregate a;
    a.age = cfg.model.start_age + static_cast<int>(i);
    const long* c = &sums.counts[i * kEmploymentCount];
    a.unemployed_share = c[0] / n;
    a.employed_share = c[1] / n;
    a.retired_share = c[2] / n;
    a.mean_net_income = sums.income[i] / n;
    r.ages.push_back(a);
  }
  r.stats = totals.stats(cfg.model.reward.gamma, cfg.simulation.report_population);
  return r;
}

PopulationResult combine(std::vector<ChunkResult>& chunks, const ScenarioConfig& cfg, bool keep) {
  PopulationResult out;
  AgeSums sums(static_cast<std::size_t>(cfg.model.record_count()));
  for (auto& c : chunks) {
    sums.merge(c.sums);
    out.totals.merge(c.totals);
    if (keep)
      for (auto& t : c.trajectories) out.trajectories.push_back(std::move(t));
  }
  out.report = build_report(sums, out.totals, cfg);
  return out;
}

}  // namespace

PopulationResult run_population(const Policy& policy, const ScenarioConfig& cfg, const SimulationOptions& opt) {
  validate(cfg);
  if (opt.agents < 1) throw ModelError("simulation: agents must be >= 1");
  check_hash(policy, cfg);
  const long n_chunks = (opt.agents + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks;
  chunks.reserve(static_cast<std::size_t>(n_chunks));
  for (long c = 0; c < n_chunks; ++c) chunks.emplace_back(static_cast<std::size_t>(cfg.model.record_count()));
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long c = 0; c < n_chunks; ++c) {
    try {
      const long first = c * kChunk;
      chunks[static_cast<std::size_t>(c)] =
          simulate_chunk(policy, cfg, opt, first, std::min(kChunk, opt.agents - first));
    } catch (...) {
#pragma omp critical(lcm_simulate_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return combine(chunks, cfg, opt.keep_trajectories);
}

namespace {

// Same chunked summation order as run_population.
AggregateReport aggregate_chunked(std::span<const Trajectory> trajs, const ScenarioConfig& cfg,
                                  PopulationTotals& totals) {
  if (trajs.empty()) throw ModelError("aggregate: empty population");
  AgeSums sums(static_cast<std::size_t>(cfg.model.record_count()));
  totals = {};
  for (std::size_t first = 0; first < trajs.size(); first += kChunk) {
    ChunkResult c(static_cast<std::size_t>(cfg.model.record_count()));
    const std::size_t last = std::min(trajs.size(), first + static_cast<std::size_t>(kChunk));
    for (std::size_t i = first; i < last; ++i) {
      if (trajs[i].records.size() != static_cast<std::size_t>(cfg.model.record_count()))
        throw ModelError("aggregate: trajectory length does not match the horizon");
      c.sums.add(trajs[i]);
      c.totals.add(trajs[i], cfg.model.reward);
    }
    sums.merge(c.sums);
    totals.merge(c.totals);
  }
  return build_report(sums, totals, cfg);
}

}  // namespace

AggregateReport aggregate(std::span<const Trajectory> trajs, const ScenarioConfig& cfg) {
  PopulationTotals totals;
  return aggregate_chunked(trajs, cfg, totals);
}

PopulationResult run_population_reference(const Policy& policy, const ScenarioConfig& cfg,
                                          const SimulationOptions& opt) {
  validate(cfg);
  if (opt.agents < 1) throw ModelError("simulation: agents must be >= 1");
  check_hash(policy, cfg);
  const ModelParams& m = cfg.model;
  PopulationResult out;
  out.trajectories.resize(static_cast<std::size_t>(opt.agents));
  for (long i = 0; i < opt.agents; ++i) {
    Rng rng = make_rng(opt.seed, opt.run_index, static_cast<std::uint64_t>(i));
    AgentState s = initial_state(m, rng);
    Trajectory& traj = out.trajectories[static_cast<std::size_t>(i)];
    for (int t = 0; t < m.decision_count(); ++t) {
      const Action a = policy.act(s, rng);
      const StepResult r = sample_step(s, a, rng, m, cfg.fiscal);
      traj.records.push_back(make_record(s, a, r, m.reward));
      s = r.next;
    }
    close_trajectory(traj, s, cfg);
  }
  out.report = aggregate_chunked(out.trajectories, cfg, out.totals);
  return out;
}

namespace {

StatBlock stat_field_op(const std::vector<AggregateReport>& runs, bool sd) {
  const double k = static_cast<double>(runs.size());
  auto reduce = [&](auto get) {
    double mean = 0.0;
    for (const auto& r : runs) mean += get(r.stats);
    mean /= k;
    if (!sd) return mean;
    double var = 0.0;
    for (const auto& r : runs) var += (get(r.stats) - mean) * (get(r.stats) - mean);
    return std::sqrt(var / k);
  };
  StatBlock s;
  s.initial_discounted_utility = reduce([](const StatBlock& b) { return b.initial_discounted_utility; });
  s.time_avg_discounted_utility = reduce([](const StatBlock& b) { return b.time_avg_discounted_utility; });
  s.equivalent_net_income = reduce([](const StatBlock& b) { return b.equivalent_net_income; });
  s.employment_person_years = reduce([](const StatBlock& b) { return b.employment_person_years; });
  s.mean_discounted_unscaled_utility = reduce([](const StatBlock& b) { return b.mean_discounted_unscaled_utility; });
  s.discount_sum = sd ? 0.0 : runs.front().stats.discount_sum;
  return s;
}

AggregateReport age_field_op(const std::vector<AggregateReport>& runs, bool sd) {
  AggregateReport out;
  out.population = runs.front().population;
  const double k = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < runs.front().ages.size(); ++i) {
    AgeAggregate a;
    a.age = runs.front().ages[i].age;
    auto reduce = [&](double AgeAggregate::*field) {
      double mean = 0.0;
      for (const auto& r : runs) mean += r.ages[i].*field;
      mean /= k;
      if (!sd) return mean;
      double var = 0.0;
      for (const auto& r : runs) var += (r.ages[i].*field - mean) * (r.ages[i].*field - mean);
      return std::sqrt(var / k);
    };
    a.employed_share = reduce(&AgeAggregate::employed_share);
    a.unemployed_share = reduce(&AgeAggregate::unemployed_share);
    a.retired_share = reduce(&AgeAggregate::retired_share);
    a.mean_net_income = reduce(&AgeAggregate::mean_net_income);
    out.ages.push_back(a);
  }
  out.stats = stat_field_op(runs, sd);
  return out;
}

}  // namespace

MultiRunResult multi_run(const PolicyProducer& produce, const ScenarioConfig& cfg, int runs, long agents,
                         std::uint64_t base_seed) {
  if (runs < 1) throw ModelError("multi_run: runs must be >= 1");
  MultiRunResult out;
  for (int k = 0; k < runs; ++k) {
    const PolicyPtr policy = produce(k);
    SimulationOptions opt;
    opt.agents = agents;
    opt.seed = base_seed;
    opt.run_index = static_cast<std::uint64_t>(k);
    out.runs.push_back(run_population(*policy, cfg, opt).report);
  }
  out.mean = age_field_op(out.runs, false);
  out.sd = age_field_op(out.runs, true);
  return out;
}

std::vector<std::string> check_invariants(std::span<const Trajectory> trajs, const AggregateReport& report,
                                          const ScenarioConfig& cfg) {
  std::vector<std::string> issues;
  for (const auto& a : report.ages) {
    const double sum = a.employed_share + a.unemployed_share + a.retired_share;
    if (std::abs(sum - 1.0) > 1e-12)
      issues.push_back("shares at age " + std::to_string(a.age) + " sum to " + std::to_string(sum));
    if (a.employed_share < 0.0 || a.unemployed_share < 0.0 || a.retired_share < 0.0)
      issues.push_back("negative share at age " + std::to_string(a.age));
  }
  const int feasible = cfg.model.feasible_retirement_age();
  for (std::size_t i = 0; i < trajs.size() && issues.size() < 20; ++i) {
    const auto& recs = trajs[i].records;
    for (std::size_t t = 0; t < recs.size(); ++t) {
      const auto& r = recs[t];
      const std::string where = "agent " + std::to_string(i) + " age " + std::to_string(r.state.age);
      if (r.action == Action::Retire && r.state.age < feasible) issues.push_back(where + ": retired before feasible age");
      if (r.state.employment == Employment::Retired && r.state.age <= feasible)
        issues.push_back(where + ": retired state before feasible age");
      if (t > 0) {
        const auto& prev = recs[t - 1];
        if (r.state.pension < prev.state.pension) issues.push_back(where + ": pension decreased");
        if (prev.state.employment == Employment::Retired && r.state.employment != Employment::Retired)
          issues.push_back(where + ": left retirement");
      }
    }
  }
  return issues;
}

namespace {

void put_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  out << buf;
}

}  // namespace

void write_aggregates_csv(const AggregateReport& r, std::ostream& out) {
  out << "age,employed_share,unemployed_share,retired_share,mean_net_income\n";
  for (const auto& a : r.ages) {
    out << a.age << ',';
    put_number(out, a.employed_share);
    out << ',';
    put_number(out, a.unemployed_share);
    out << ',';
    put_number(out, a.retired_share);
    out << ',';
    put_number(out, a.mean_net_income);
    out << '\n';
  }
}

void write_trajectories_csv(std::span<const Trajectory> trajs, std::ostream& out) {
  out << "agent,age,employment,pension,prev_wage,time_in_state,wage,action,worked,net_income,utility,reward\n";
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (const auto& r : trajs[i].records) {
      out << i << ',' << r.state.age << ',' << to_string(r.state.employment) << ',';
      put_number(out, r.state.pension);
      out << ',';
      put_number(out, r.state.prev_wage);
      out << ',' << r.state.time_in_state << ',';
      put_number(out, r.state.wage);
      out << ',' << to_string(r.action) << ',' << (r.worked ? 1 : 0) << ',';
      put_number(out, r.net_income);
      out << ',';
      put_number(out, r.utility);
      out << ',';
      put_number(out, r.reward);
      out << '\n';
    }
  }
}

}  // namespace lcm
