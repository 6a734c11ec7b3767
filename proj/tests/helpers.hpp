#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lcm/config.hpp"

namespace testing {

inline double chi_square_p(const std::vector<long>& observed, const std::vector<double>& expected_p) {
  long n = 0;
  for (long o : observed) n += o;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected_p[i] <= 0.0) continue;
    const double e = expected_p[i] * static_cast<double>(n);
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lcm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small but complete configuration: late start, coarse grid, short training.
inline lcm::ScenarioConfig small_config(int start_age = 60) {
  lcm::ScenarioConfig c = lcm::default_config(lcm::Preset::Desk);
  c.model.start_age = start_age;
  c.grid.n_pension = 6;
  c.grid.pension_step = 417.0 * 19 / 5;
  c.grid.n_prev_wage = 4;
  c.grid.prev_wage_step = 701.0 * 19 / 3;
  c.grid.n_wage = 6;
  c.grid.wage_step = 701.0 * 24 / 5;
  c.grid.n_tis = 3;
  c.train.total_env_steps = 20000;
  c.simulation.runs = 2;
  c.simulation.agents = 600;
  c.simulation.map_ages = {start_age};
  return c;
}

}  // namespace testing
