#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lcm/fiscal.hpp"
#include "lcm/model.hpp"

namespace lcm {

// Raised for unknown keys, bad values or unparseable configuration text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Knot layout of the DP grid. Monetary steps and origins are in e/month;
// accessors return e/year.
struct GridSpec {
  int n_pension = 20;
  int n_prev_wage = 20;
  int n_wage = 25;
  int n_tis = 5;
  double pension_origin = 0.0;
  double pension_step = 417.0;
  double prev_wage_origin = 0.0;
  double prev_wage_step = 701.0;
  double wage_origin = 83.0;
  double wage_step = 701.0;
  int quadrature_nodes = 5;
  // Policy-map slices fix these axes at knot indices (-1 = middle knot).
  int map_prev_wage_knot = -1;
  int map_tis_knot = 1;

  std::vector<double> pension_knots() const;
  std::vector<double> prev_wage_knots() const;
  std::vector<double> wage_knots() const;
  // Same axis ranges with 2n-1 knots on the pension and wage axes.
  GridSpec refined() const;
};

void validate(const GridSpec& g);

enum class Optimizer { SgdMomentum, Adam };

struct TrainConfig {
  long total_env_steps = 1'000'000;
  int batch_episodes = 64;
  double learning_rate_policy = 1e-3;
  double learning_rate_value = 1e-3;
  double entropy_coefficient = 0.01;
  double gradient_clip_norm = 5.0;
  double momentum = 0.9;
  Optimizer optimizer = Optimizer::Adam;
  bool normalize_advantages = true;
  std::uint64_t seed = 1;
  std::vector<int> policy_hidden{32, 32, 32};
  std::vector<int> value_hidden{128, 128, 128};
  double leaky_slope = 0.01;
  double wage_ref = 40000.0;
  double pension_ref = 20000.0;
};

void validate(const TrainConfig& t);

struct SimulationSpec {
  int runs = 3;
  int agents = 10000;
  std::uint64_t seed = 20201023;
  // Person-year totals are rescaled to this population size.
  int report_population = 100000;
  std::vector<int> map_ages{30, 40, 55, 60, 62, 64};
};

enum class Preset { Desk, Full };

struct ScenarioConfig {
  std::string name = "baseline";
  ModelParams model;
  FiscalRules fiscal;
  GridSpec grid;
  TrainConfig train;
  SimulationSpec simulation;

  // Hash of everything that influences a solved policy (not name, not simulation).
  std::uint64_t hash() const;
  // As hash() but with the reform fields (min_retirement_age, UBI block) removed;
  // two runs are comparable iff their base hashes agree.
  std::uint64_t base_hash() const;
};

ScenarioConfig default_config(Preset preset = Preset::Full);
void validate(const ScenarioConfig& c);

// Parses JSON configuration text on top of the preset defaults. Empty text is
// the all-defaults configuration.
ScenarioConfig parse_config(std::string_view text, Preset preset = Preset::Full);
ScenarioConfig load_config(const std::filesystem::path& path, Preset preset = Preset::Full);

// Canonical JSON form (all fields, fixed key order).
std::string to_json(const ScenarioConfig& c, int indent = 2);
std::string hash_hex(std::uint64_t h);

}  // namespace lcm
