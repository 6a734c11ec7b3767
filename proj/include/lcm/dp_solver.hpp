#pragma once

// Backward-induction value iteration on the (employment, pension, prev_wage,
// time-in-state, wage) grid with natural-cubic-spline interpolation of the
// continuation value.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include "lcm/config.hpp"
#include "lcm/model.hpp"
#include "lcm/quadrature.hpp"
#include "lcm/spline.hpp"

namespace lcm {

// Interpolants for one age layer: one tensor spline per (employment, tis knot).
class LayerInterpolant {
 public:
  LayerInterpolant(const SplineAxis* pension, const SplineAxis* prev_wage, const SplineAxis* wage, int n_tis,
                   std::span<const double> layer_values);

  const TensorSpline3& slice(Employment e, int tis_knot) const {
    return splines_[static_cast<int>(e) * n_tis_ + tis_knot];
  }
  int n_tis() const { return n_tis_; }

 private:
  int n_tis_;
  std::vector<TensorSpline3> splines_;
};

// Solved value function. Values are stored per age layer as a row-major tensor
// over (employment, pension, prev_wage, tis, wage); the final layer is the
// terminal valuation. Greedy actions are stored for every decision layer.
class ValueGrid {
 public:
  ValueGrid(GridSpec grid, int start_age, int end_age, std::uint64_t config_hash);

  ValueGrid(const ValueGrid&) = delete;
  ValueGrid& operator=(const ValueGrid&) = delete;
  ValueGrid(ValueGrid&&) = default;
  ValueGrid& operator=(ValueGrid&&) = default;

  const GridSpec& grid() const { return grid_; }
  int start_age() const { return start_age_; }
  int end_age() const { return end_age_; }
  int layer_count() const { return end_age_ - start_age_ + 1; }
  std::uint64_t config_hash() const { return config_hash_; }
  std::size_t layer_size() const { return layer_size_; }

  const std::vector<double>& pension_knots() const { return axes_->pension.knots; }
  const std::vector<double>& prev_wage_knots() const { return axes_->prev_wage.knots; }
  const std::vector<double>& wage_knots() const { return axes_->wage.knots; }

  std::size_t index(Employment e, int p, int q, int t, int w) const;
  double value(int age, Employment e, int p, int q, int t, int w) const;
  Action action(int age, Employment e, int p, int q, int t, int w) const;

  std::span<double> layer(int age);
  std::span<const double> layer(int age) const;
  std::span<std::uint8_t> action_layer(int age);
  std::span<const std::uint8_t> action_layer(int age) const;

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& actions() const { return actions_; }

  // Spline interpolant of a layer, built on first use; thread-safe.
  const LayerInterpolant& interpolant(int age) const;
  // Interpolated value at a continuous state (nearest knot along tis).
  double interpolate(const AgentState& s) const;

  int tis_knot(int time_in_state) const;

  bool operator==(const ValueGrid& o) const {
    return config_hash_ == o.config_hash_ && start_age_ == o.start_age_ && end_age_ == o.end_age_ &&
           values_ == o.values_ && actions_ == o.actions_;
  }

 private:
  GridSpec grid_;
  int start_age_, end_age_;
  std::uint64_t config_hash_;
  struct Axes {
    SplineAxis pension, prev_wage, wage;
  };
  // heap-held so interpolants keep valid axis pointers across moves
  std::unique_ptr<const Axes> axes_;
  std::size_t layer_size_;
  std::vector<double> values_;
  std::vector<std::uint8_t> actions_;  // decision layers only
  struct LazyLayer {
    std::once_flag once;
    std::unique_ptr<LayerInterpolant> interp;
  };
  std::unique_ptr<LazyLayer[]> lazy_;
};

// Parallel solver (OpenMP over the knots of each age layer).
ValueGrid backward_induct(const ScenarioConfig& cfg);
// Serial reference: plain loops and successive 1-D spline passes for every
// continuation value. Same result as backward_induct to rounding.
ValueGrid backward_induct_reference(const ScenarioConfig& cfg);

// Quadrature-expected action values at a continuous state; infeasible actions
// get -infinity. s.age must be a decision age.
std::array<double, kActionCount> action_values(const ValueGrid& vg, const ScenarioConfig& cfg,
                                               const AgentState& s);
// Argmax of action_values, ties to the lowest action code.
Action greedy_action(const ValueGrid& vg, const ScenarioConfig& cfg, const AgentState& s);

// Stored greedy actions at one decision age over (pension knots x wage knots),
// prev_wage and tis fixed at the grid's reference knots. Row-major [pension][wage].
struct PolicyMap {
  int age = 0;
  Employment employment = Employment::Employed;
  std::vector<double> pension;
  std::vector<double> wage;
  std::vector<Action> actions;

  Action at(int p, int w) const { return actions[static_cast<std::size_t>(p) * wage.size() + w]; }
};

PolicyMap policy_map(const ValueGrid& vg, int age, Employment e);

// Versioned little-endian binary persistence.
void save_value_grid(const ValueGrid& vg, const std::filesystem::path& path);
ValueGrid load_value_grid(const std::filesystem::path& path);

}  // namespace lcm
