#pragma once

#include <vector>

#include "lcm/model.hpp"

namespace lcm {

// One year of a simulated life. The state is the one observed at the decision;
// worked/net_income/utility/reward describe the year that follows it.
struct TrajectoryRecord {
  AgentState state;
  Action action = Action::Stay;
  bool worked = false;
  double net_income = 0.0;
  double utility = 0.0;  // unscaled
  double reward = 0.0;   // scaled
};

// Records for ages start_age..end_age. The end-age record is the forced
// retirement year; terminal_value holds the rest of the post-horizon stream
// discounted to end_age.
struct Trajectory {
  std::vector<TrajectoryRecord> records;
  double terminal_value = 0.0;
};

}  // namespace lcm
