#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "lcm/scenario.hpp"

using namespace lcm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunOptions in(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir;
  return o;
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LCM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("dp run writes every artifact and a manifest") {
    const ScenarioConfig c = testing::small_config(60);
    const auto dir = testing::scratch_dir("dp_run");
    RunOptions o = in(dir);
    o.dump_trajectories = true;
    const RunOutcome r = run_scenario(c, Solver::Dp, o);
    for (const char* f : {"valuegrid.bin", "aggregates.csv", "aggregates_sd.csv", "policy_age60_employed.csv",
                          "policy_age60_unemployed.csv", "trajectories.csv", "summary.json"}) {
      CHECK_MESSAGE(fs::exists(dir / f), f);
      CHECK(std::find(r.files.begin(), r.files.end(), f) != r.files.end());
    }
    const json s = json::parse(testing::slurp(dir / "summary.json"));
    CHECK(s.at("config_hash") == hash_hex(c.hash()));
    CHECK(s.at("base_hash") == hash_hex(c.base_hash()));
    CHECK(s.at("solver") == "dp");
    CHECK(s.at("runs") == 2);
    CHECK(s.at("run_stats").size() == 2);
    CHECK(s.at("files").size() == r.files.size());
    CHECK_FALSE(s.contains("training"));
    CHECK(parse_config(s.at("config").dump()).hash() == c.hash());
    CHECK(first_line(dir / "aggregates.csv") == "age,employed_share,unemployed_share,retired_share,mean_net_income");
    CHECK(first_line(dir / "policy_age60_employed.csv") == "pension,wage,action");
    CHECK(r.result.runs.size() == 2);
  }

  TEST_CASE("rerunning reproduces the aggregates and reuses artifacts") {
    const ScenarioConfig c = testing::small_config(62);
    const auto a = testing::scratch_dir("rerun_a"), b = testing::scratch_dir("rerun_b");
    run_scenario(c, Solver::Dp, in(a));
    run_scenario(c, Solver::Dp, in(b));
    CHECK(testing::slurp(a / "aggregates.csv") == testing::slurp(b / "aggregates.csv"));
    CHECK(testing::slurp(a / "valuegrid.bin") == testing::slurp(b / "valuegrid.bin"));

    RunOptions reuse = in(b);
    reuse.reuse_artifacts = true;
    run_scenario(c, Solver::Dp, reuse);
    CHECK(testing::slurp(a / "aggregates.csv") == testing::slurp(b / "aggregates.csv"));

    ScenarioConfig other = c;
    other.model.reward.kappa = 0.6;
    CHECK_THROWS_AS(run_scenario(other, Solver::Dp, reuse), ArtifactError);
  }

  TEST_CASE("random and rl runs") {
    ScenarioConfig c = testing::small_config(64);
    const auto rnd = testing::scratch_dir("random_run");
    run_scenario(c, Solver::Random, in(rnd));
    const json s = json::parse(testing::slurp(rnd / "summary.json"));
    CHECK(s.at("solver") == "random");
    CHECK_FALSE(s.contains("training"));
    CHECK_FALSE(fs::exists(rnd / "policy_age64_employed.csv"));

    c.train.total_env_steps = 2000;
    const auto rl = testing::scratch_dir("rl_run");
    run_scenario(c, Solver::Rl, in(rl));
    CHECK(fs::exists(rl / "policy.bin"));
    CHECK(fs::exists(rl / "policy_run1.bin"));
    CHECK(fs::exists(rl / "policy_age64_unemployed.csv"));
    const json t = json::parse(testing::slurp(rl / "summary.json"));
    CHECK(t.at("solver") == "rl");
    REQUIRE(t.at("training").size() == 2);
    CHECK(t.at("training")[0].at("env_steps").get<long>() >= 2000);
  }

  TEST_CASE("comparing a run with itself gives zero deltas") {
    const ScenarioConfig c = testing::small_config(63);
    const auto run = testing::scratch_dir("self_run"), out = testing::scratch_dir("self_cmp");
    run_scenario(c, Solver::Random, in(run));
    const CompareOutcome r = compare_runs(run, run, out);
    CHECK(r.employment_delta == 0.0);
    CHECK(std::abs(r.compensating_consumption_pct) < 1e-9);
    CHECK(first_line(out / "comparison.csv") == "statistic,run_a,run_b,delta");
    CHECK(first_line(out / "employment_difference.csv") == "age,employed_share_a,employed_share_b,delta");
    const json j = json::parse(testing::slurp(out / "comparison.json"));
    for (const auto& [name, d] : j.at("deltas").items()) CHECK_MESSAGE(std::abs(d.at("delta").get<double>()) < 1e-9, name);
  }

  TEST_CASE("reforms compare against the baseline, other changes are refused") {
    ScenarioConfig base = testing::small_config(63);
    ScenarioConfig reform = base;
    reform.model.min_retirement_age = 66;
    reform.name = "retirement66";
    ScenarioConfig other = base;
    other.fiscal.basic_ui_benefit = 9000;
    const auto a = testing::scratch_dir("cmp_base"), b = testing::scratch_dir("cmp_reform"),
               x = testing::scratch_dir("cmp_other"), out = testing::scratch_dir("cmp_out");
    run_scenario(base, Solver::Random, in(a));
    run_scenario(reform, Solver::Random, in(b));
    run_scenario(other, Solver::Random, in(x));
    const CompareOutcome r = compare_runs(a, b, out);
    CHECK(r.files.size() == 3);
    CHECK_THROWS_AS(compare_runs(a, x, out), ArtifactError);
    CHECK_THROWS_AS(compare_runs(a, testing::scratch_dir("cmp_empty"), out), ArtifactError);
  }

  TEST_CASE("report lists the statistics") {
    const ScenarioConfig c = testing::small_config(65);
    const auto dir = testing::scratch_dir("report_run");
    run_scenario(c, Solver::Random, in(dir));
    const std::string text = report_run(dir);
    CHECK(text.find("initial discounted utility") != std::string::npos);
    CHECK(text.find("employment person-years") != std::string::npos);
  }

  TEST_CASE("solver names") {
    CHECK(parse_solver("dp") == Solver::Dp);
    CHECK(parse_solver("rl") == Solver::Rl);
    CHECK(parse_solver("random") == Solver::Random);
    CHECK(std::string(to_string(Solver::Rl)) == "rl");
    CHECK_THROWS(parse_solver("qlearning"));
  }

  TEST_CASE("command line round trip") {
    const auto dir = testing::scratch_dir("cli");
    const fs::path cfg = dir / "tiny.json";
    std::ofstream(cfg) << R"({"name": "tiny", "model": {"start_age": 64},
      "grid": {"n_pension": 4, "n_prev_wage": 3, "n_wage": 4, "n_tis": 2},
      "simulation": {"runs": 1, "agents": 300, "map_ages": [64]}})";
    CHECK(run_cli("simulate --solver dp -c " + cfg.string() + " -o " + (dir / "dp").string()) == 0);
    CHECK(fs::exists(dir / "dp" / "summary.json"));
    CHECK(run_cli("simulate --solver random -c " + cfg.string() + " -o " + (dir / "rnd").string()) == 0);
    CHECK(run_cli("compare " + (dir / "dp").string() + " " + (dir / "rnd").string() + " -o " + (dir / "cmp").string()) ==
          0);
    CHECK(fs::exists(dir / "cmp" / "comparison.csv"));
    CHECK(run_cli("report " + (dir / "dp").string()) == 0);
    CHECK(run_cli("simulate --solver dp -o " + (dir / "x").string() + " -c /nonexistent.json") == 1);
    CHECK(run_cli("frobnicate") == 2);
  }
}
