#include "lcm/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace lcm {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Solver s) {
  switch (s) {
    case Solver::Dp: return "dp";
    case Solver::Rl: return "rl";
    case Solver::Random: return "random";
  }
  return "?";
}

Solver parse_solver(const std::string& name) {
  if (name == "dp") return Solver::Dp;
  if (name == "rl") return Solver::Rl;
  if (name == "random") return Solver::Random;
  throw ConfigError("solver", "expected dp, rl or random, got '" + name + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ArtifactError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw ArtifactError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

json stats_json(const StatBlock& s) {
  json j = {{"initial_discounted_utility", s.initial_discounted_utility},
            {"time_avg_discounted_utility", s.time_avg_discounted_utility},
            {"equivalent_net_income", s.equivalent_net_income},
            {"employment_person_years", s.employment_person_years},
            {"compensating_consumption_pct", nullptr},
            {"mean_discounted_unscaled_utility", s.mean_discounted_unscaled_utility},
            {"discount_sum", s.discount_sum}};
  if (s.compensating_consumption_pct) j["compensating_consumption_pct"] = *s.compensating_consumption_pct;
  return j;
}

StatBlock stats_from_json(const json& j) {
  StatBlock s;
  s.initial_discounted_utility = j.at("initial_discounted_utility").get<double>();
  s.time_avg_discounted_utility = j.at("time_avg_discounted_utility").get<double>();
  s.equivalent_net_income = j.at("equivalent_net_income").get<double>();
  s.employment_person_years = j.at("employment_person_years").get<double>();
  if (!j.at("compensating_consumption_pct").is_null())
    s.compensating_consumption_pct = j.at("compensating_consumption_pct").get<double>();
  s.mean_discounted_unscaled_utility = j.at("mean_discounted_unscaled_utility").get<double>();
  s.discount_sum = j.at("discount_sum").get<double>();
  return s;
}

std::string policy_file(int run) { return run == 0 ? "policy.bin" : "policy_run" + std::to_string(run) + ".bin"; }

std::string map_file(int age, Employment e) {
  return "policy_age" + std::to_string(age) + (e == Employment::Employed ? "_employed.csv" : "_unemployed.csv");
}

json telemetry_json(int run, const TrainingTelemetry& t) {
  return {{"run", run},
          {"env_steps", t.env_steps},
          {"updates", t.updates},
          {"seconds", t.seconds},
          {"final_mean_return", t.mean_return.empty() ? 0.0 : t.mean_return.back()},
          {"mean_return", t.mean_return}};
}

}  // namespace

PolicyMap policy_map(const RlPolicy& policy, const GridSpec& grid, int age, Employment e) {
  const auto greedy = policy.with_mode(RlPolicy::Mode::Greedy);
  const auto prev = grid.prev_wage_knots();
  const int q = grid.map_prev_wage_knot < 0 ? (grid.n_prev_wage - 1) / 2 : grid.map_prev_wage_knot;
  PolicyMap map;
  map.age = age;
  map.employment = e;
  map.pension = grid.pension_knots();
  map.wage = grid.wage_knots();
  Rng unused;
  for (double p : map.pension) {
    for (double w : map.wage) {
      AgentState s;
      s.employment = e;
      s.age = age;
      s.pension = p;
      s.prev_wage = prev[static_cast<std::size_t>(q)];
      s.time_in_state = grid.map_tis_knot;
      s.wage = w;
      map.actions.push_back(greedy->act(s, unused));
    }
  }
  return map;
}

void write_policy_map_csv(const PolicyMap& m, std::ostream& out) {
  out << "pension,wage,action\n";
  char buf[64];
  for (std::size_t p = 0; p < m.pension.size(); ++p) {
    for (std::size_t w = 0; w < m.wage.size(); ++w) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,", m.pension[p], m.wage[w]);
      out << buf << to_string(m.at(static_cast<int>(p), static_cast<int>(w))) << '\n';
    }
  }
}

RunOutcome run_scenario(const ScenarioConfig& cfg, Solver solver, const RunOptions& opt) {
  const auto t0 = Clock::now();
  validate(cfg);
  prepare_dir(opt.out_dir);
  const auto& sim = cfg.simulation;
  const auto log = [&](const std::string& msg) {
    if (!opt.quiet) std::cerr << "[" << cfg.name << "] " << msg << '\n';
  };

  RunOutcome outcome;
  json training = json::array();
  std::vector<PolicyMap> maps;
  PolicyPtr first_policy;
  PolicyProducer produce;
  std::vector<std::shared_ptr<RlPolicy>> trained(static_cast<std::size_t>(sim.runs));

  switch (solver) {
    case Solver::Dp: {
      const fs::path path = opt.out_dir / "valuegrid.bin";
      std::shared_ptr<ValueGrid> grid;
      if (opt.reuse_artifacts && fs::exists(path)) {
        grid = std::make_shared<ValueGrid>(load_value_grid(path));
        if (grid->config_hash() != cfg.hash())
          throw ArtifactError(path.string() + " was solved for config " + hash_hex(grid->config_hash()) +
                              ", not " + hash_hex(cfg.hash()));
        log("reusing " + path.string());
      } else {
        log("solving value grid");
        grid = std::make_shared<ValueGrid>(backward_induct(cfg));
        save_value_grid(*grid, path);
      }
      outcome.files.push_back("valuegrid.bin");
      first_policy = std::make_shared<DpPolicy>(grid, cfg);
      produce = [p = first_policy](int) { return p; };
      for (int age : sim.map_ages)
        for (Employment e : {Employment::Employed, Employment::Unemployed}) maps.push_back(policy_map(*grid, age, e));
      break;
    }
    case Solver::Rl: {
      for (int k = 0; k < sim.runs; ++k) {
        const fs::path path = opt.out_dir / policy_file(k);
        if (opt.reuse_artifacts && fs::exists(path)) {
          trained[k] = load_policy(path, cfg.model);
          if (trained[k]->config_hash() != cfg.hash())
            throw ArtifactError(path.string() + " was trained for config " + hash_hex(*trained[k]->config_hash()) +
                                ", not " + hash_hex(cfg.hash()));
          log("reusing " + path.string());
        } else {
          log("training run " + std::to_string(k));
          TrainResult r = train(cfg, static_cast<std::uint64_t>(k));
          trained[k] = r.policy;
          save_policy(*trained[k], path);
          training.push_back(telemetry_json(k, r.telemetry));
        }
        outcome.files.push_back(policy_file(k));
      }
      first_policy = trained[0];
      produce = [&trained](int k) -> PolicyPtr { return trained[static_cast<std::size_t>(k)]; };
      for (int age : sim.map_ages)
        for (Employment e : {Employment::Employed, Employment::Unemployed})
          maps.push_back(policy_map(*trained[0], cfg.grid, age, e));
      break;
    }
    case Solver::Random:
      first_policy = random_policy(cfg.model);
      produce = [p = first_policy](int) { return p; };
      break;
  }

  log("simulating " + std::to_string(sim.runs) + " x " + std::to_string(sim.agents) + " agents");
  outcome.result = multi_run(produce, cfg, sim.runs, sim.agents, sim.seed);

  {
    auto out = open_out(opt.out_dir / "aggregates.csv");
    write_aggregates_csv(outcome.result.mean, out);
    outcome.files.push_back("aggregates.csv");
    auto sd = open_out(opt.out_dir / "aggregates_sd.csv");
    write_aggregates_csv(outcome.result.sd, sd);
    outcome.files.push_back("aggregates_sd.csv");
  }
  for (const auto& m : maps) {
    const std::string name = map_file(m.age, m.employment);
    auto out = open_out(opt.out_dir / name);
    write_policy_map_csv(m, out);
    outcome.files.push_back(name);
  }
  if (opt.dump_trajectories) {
    SimulationOptions so;
    so.agents = sim.agents;
    so.seed = sim.seed;
    so.keep_trajectories = true;
    const auto pop = run_population(*first_policy, cfg, so);
    auto out = open_out(opt.out_dir / "trajectories.csv");
    write_trajectories_csv(pop.trajectories, out);
    outcome.files.push_back("trajectories.csv");
  }

  outcome.seconds = seconds_since(t0);
  json summary = {{"scenario", cfg.name},
                  {"solver", to_string(solver)},
                  {"config_hash", hash_hex(cfg.hash())},
                  {"base_hash", hash_hex(cfg.base_hash())},
                  {"start_age", cfg.model.start_age},
                  {"end_age", cfg.model.end_age},
                  {"runs", sim.runs},
                  {"agents", sim.agents},
                  {"seed", sim.seed},
                  {"report_population", sim.report_population},
                  {"stats", stats_json(outcome.result.mean.stats)},
                  {"stats_sd", stats_json(outcome.result.sd.stats)},
                  {"run_stats", json::array()},
                  {"wall_clock_seconds", outcome.seconds}};
  for (const auto& r : outcome.result.runs) summary["run_stats"].push_back(stats_json(r.stats));
  if (solver == Solver::Rl) summary["training"] = training;
  outcome.files.push_back("summary.json");
  summary["files"] = outcome.files;
  summary["config"] = json::parse(to_json(cfg));
  auto out = open_out(opt.out_dir / "summary.json");
  out << summary.dump(2) << '\n';
  return outcome;
}

namespace {

json read_summary(const fs::path& dir) {
  const fs::path path = dir / "summary.json";
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::vector<AgeAggregate> read_aggregates(const fs::path& dir) {
  const fs::path path = dir / "aggregates.csv";
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "age,employed_share,unemployed_share,retired_share,mean_net_income")
    throw ArtifactError(path.string() + ": unexpected header");
  std::vector<AgeAggregate> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AgeAggregate a;
    char comma;
    std::istringstream ss(line);
    if (!(ss >> a.age >> comma >> a.employed_share >> comma >> a.unemployed_share >> comma >> a.retired_share >>
          comma >> a.mean_net_income))
      throw ArtifactError(path.string() + ": bad row '" + line + "'");
    rows.push_back(a);
  }
  return rows;
}

}  // namespace

CompareOutcome compare_runs(const fs::path& run_a, const fs::path& run_b, const fs::path& out_dir) {
  const json a = read_summary(run_a), b = read_summary(run_b);
  if (a.at("start_age") != b.at("start_age") || a.at("end_age") != b.at("end_age"))
    throw ArtifactError("runs cover different horizons");
  if (a.at("base_hash") != b.at("base_hash"))
    throw ArtifactError("runs differ in more than the reform fields (base hash " + a.at("base_hash").get<std::string>() +
                        " vs " + b.at("base_hash").get<std::string>() + ")");
  const StatBlock sa = stats_from_json(a.at("stats")), sb = stats_from_json(b.at("stats"));
  const auto agg_a = read_aggregates(run_a), agg_b = read_aggregates(run_b);
  if (agg_a.size() != agg_b.size()) throw ArtifactError("aggregate tables differ in length");
  prepare_dir(out_dir);

  CompareOutcome outcome;
  outcome.compensating_consumption_pct =
      compensating_consumption(sa.mean_discounted_unscaled_utility, sb.mean_discounted_unscaled_utility, sa.discount_sum);
  outcome.employment_delta = sb.employment_person_years - sa.employment_person_years;

  struct Row {
    const char* name;
    double va, vb;
  };
  const Row rows[] = {
      {"initial_discounted_utility", sa.initial_discounted_utility, sb.initial_discounted_utility},
      {"time_avg_discounted_utility", sa.time_avg_discounted_utility, sb.time_avg_discounted_utility},
      {"equivalent_net_income", sa.equivalent_net_income, sb.equivalent_net_income},
      {"employment_person_years", sa.employment_person_years, sb.employment_person_years},
      {"compensating_consumption_pct", 0.0, outcome.compensating_consumption_pct},
  };
  json deltas = json::object();
  {
    auto out = open_out(out_dir / "comparison.csv");
    out << "statistic,run_a,run_b,delta\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g\n", r.name, r.va, r.vb, r.vb - r.va);
      out << buf;
      deltas[r.name] = {{"run_a", r.va}, {"run_b", r.vb}, {"delta", r.vb - r.va}};
    }
  }
  {
    auto out = open_out(out_dir / "employment_difference.csv");
    out << "age,employed_share_a,employed_share_b,delta\n";
    char buf[128];
    for (std::size_t i = 0; i < agg_a.size(); ++i) {
      if (agg_a[i].age != agg_b[i].age) throw ArtifactError("aggregate tables cover different ages");
      std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g\n", agg_a[i].age, agg_a[i].employed_share,
                    agg_b[i].employed_share, agg_b[i].employed_share - agg_a[i].employed_share);
      out << buf;
    }
  }
  json summary = {{"run_a", {{"path", run_a.string()}, {"scenario", a.at("scenario")}, {"solver", a.at("solver")},
                             {"config_hash", a.at("config_hash")}}},
                  {"run_b", {{"path", run_b.string()}, {"scenario", b.at("scenario")}, {"solver", b.at("solver")},
                             {"config_hash", b.at("config_hash")}}},
                  {"base_hash", a.at("base_hash")},
                  {"deltas", deltas}};
  auto out = open_out(out_dir / "comparison.json");
  out << summary.dump(2) << '\n';
  outcome.files = {"comparison.csv", "employment_difference.csv", "comparison.json"};
  return outcome;
}

std::string report_run(const fs::path& run_dir) {
  const json s = read_summary(run_dir);
  const StatBlock mean = stats_from_json(s.at("stats")), sd = stats_from_json(s.at("stats_sd"));
  std::ostringstream out;
  out << "scenario " << s.at("scenario").get<std::string>() << " (" << s.at("solver").get<std::string>()
      << "), config " << s.at("config_hash").get<std::string>() << "\n"
      << s.at("runs") << " runs x " << s.at("agents") << " agents, " << s.at("wall_clock_seconds").get<double>()
      << " s\n\n";
  char buf[160];
  const auto row = [&](const char* name, double m, double d) {
    std::snprintf(buf, sizeof buf, "%-30s %16.6f  (sd %.6f)\n", name, m, d);
    out << buf;
  };
  row("initial discounted utility", mean.initial_discounted_utility, sd.initial_discounted_utility);
  row("time-avg discounted utility", mean.time_avg_discounted_utility, sd.time_avg_discounted_utility);
  row("equivalent net income", mean.equivalent_net_income, sd.equivalent_net_income);
  row("employment person-years", mean.employment_person_years, sd.employment_person_years);
  if (s.contains("training"))
    for (const auto& t : s.at("training"))
      out << "training run " << t.at("run") << ": " << t.at("env_steps") << " steps, " << t.at("updates")
          << " updates, final mean return " << t.at("final_mean_return").get<double>() << "\n";
  return out.str();
}

}  // namespace lcm
