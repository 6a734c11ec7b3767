#include "lcm/dp_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lcm/fiscal.hpp"

namespace lcm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const std::vector<QuadratureNode>& cached_rule(int n) {
  thread_local std::vector<std::vector<QuadratureNode>> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  if (cache[n].empty()) cache[n] = standard_normal_rule(n);
  return cache[n];
}

// Q(s, a) = r(s, a) + gamma * E[V_{age+1}(s')] for every feasible a. The
// continuation functor receives the deterministic part of s' and the wage nodes.
template <class Continuation>
std::array<double, kActionCount> evaluate_actions(const ScenarioConfig& cfg, const AgentState& s,
                                                  Continuation&& continuation) {
  std::array<double, kActionCount> q;
  q.fill(kNegInf);
  const auto& m = cfg.model;
  const auto& rule = cached_rule(cfg.grid.quadrature_nodes);
  QuadratureNode nodes[64];
  for (Action a : feasible_actions(s, m)) {
    const AgentState y = year_state(s, a, m);
    const double n = net_income(y, cfg.fiscal);
    const double r = reward(y.employment, n, m.reward);
    const double next_pension = s.pension + accrue_pension(y, cfg.fiscal);
    const double next_prev = y.employment == Employment::Employed ? y.wage : y.prev_wage;
    int count = 1;
    if (y.employment == Employment::Retired) {
      // retired values do not depend on the wage
      nodes[0] = {y.wage, 1.0};
    } else {
      count = wage_quadrature(next_wage_distribution(y.employment, y.wage, s.age + 1, m.wage), rule, nodes);
    }
    const double ev = continuation(y.employment, y.time_in_state, next_pension, next_prev,
                                   std::span<const QuadratureNode>(nodes, count));
    q[static_cast<int>(a)] = r + m.reward.gamma * ev;
  }
  return q;
}

Action argmax(const std::array<double, kActionCount>& q) {
  int best = 0;
  for (int a = 1; a < kActionCount; ++a)
    if (q[a] > q[best]) best = a;
  return static_cast<Action>(best);
}

struct FastContinuation {
  const ValueGrid& vg;
  const LayerInterpolant& next;

  double operator()(Employment e, int tis, double pension, double prev_wage,
                    std::span<const QuadratureNode> nodes) const {
    const TensorSpline3& sp = next.slice(e, vg.tis_knot(tis));
    const auto partial = sp.prepare(pension, prev_wage);
    double ev = 0.0;
    for (const auto& n : nodes) ev += n.weight * sp.evaluate(partial, n.value);
    return ev;
  }
};

AgentState knot_state(const ValueGrid& vg, int age, Employment e, int p, int q, int t, int w) {
  AgentState s;
  s.employment = e;
  s.age = age;
  s.pension = vg.pension_knots()[p];
  s.prev_wage = vg.prev_wage_knots()[q];
  s.time_in_state = t;
  s.wage = vg.wage_knots()[w];
  return s;
}

void fill_terminal_layer(ValueGrid& vg, const ScenarioConfig& cfg) {
  const auto& g = vg.grid();
  auto layer = vg.layer(vg.end_age());
  for (int p = 0; p < g.n_pension; ++p) {
    AgentState s;
    s.age = vg.end_age();
    s.pension = vg.pension_knots()[p];
    const double tv = terminal_value(s, cfg.model, cfg.fiscal);
    for (int e = 0; e < kEmploymentCount; ++e)
      for (int q = 0; q < g.n_prev_wage; ++q)
        for (int t = 0; t < g.n_tis; ++t)
          for (int w = 0; w < g.n_wage; ++w) layer[vg.index(static_cast<Employment>(e), p, q, t, w)] = tv;
  }
}

[[noreturn]] void report_non_finite(const ValueGrid& vg, int age, std::size_t idx) {
  const auto& g = vg.grid();
  std::size_t r = idx;
  const int w = static_cast<int>(r % g.n_wage);
  r /= g.n_wage;
  const int t = static_cast<int>(r % g.n_tis);
  r /= g.n_tis;
  const int q = static_cast<int>(r % g.n_prev_wage);
  r /= g.n_prev_wage;
  const int p = static_cast<int>(r % g.n_pension);
  const int e = static_cast<int>(r / g.n_pension);
  std::ostringstream msg;
  msg << "backward_induct: non-finite value at age " << age << ", knot (employment=" << to_string(static_cast<Employment>(e))
      << ", pension=" << p << ", prev_wage=" << q << ", tis=" << t << ", wage=" << w << ")";
  throw ModelError(msg.str());
}

// Fills the value and action for a single working-age knot. Retired knots are
// filled per pension level by fill_retired.
template <class Continuation>
void solve_knot(ValueGrid& vg, const ScenarioConfig& cfg, int age, std::size_t idx, const AgentState& s,
                Continuation& cont) {
  const auto q = evaluate_actions(cfg, s, cont);
  const Action best = argmax(q);
  vg.layer(age)[idx] = q[static_cast<int>(best)];
  vg.action_layer(age)[idx] = static_cast<std::uint8_t>(best);
}

template <class Continuation>
void fill_retired(ValueGrid& vg, const ScenarioConfig& cfg, int age, int p, Continuation& cont) {
  const auto& g = vg.grid();
  const AgentState s = knot_state(vg, age, Employment::Retired, p, 0, 0, 0);
  const auto q = evaluate_actions(cfg, s, cont);
  const double v = q[static_cast<int>(Action::Stay)];
  auto layer = vg.layer(age);
  auto acts = vg.action_layer(age);
  for (int qq = 0; qq < g.n_prev_wage; ++qq)
    for (int t = 0; t < g.n_tis; ++t)
      for (int w = 0; w < g.n_wage; ++w) {
        const std::size_t idx = vg.index(Employment::Retired, p, qq, t, w);
        layer[idx] = v;
        acts[idx] = static_cast<std::uint8_t>(Action::Stay);
      }
}

std::size_t first_non_finite(std::span<const double> layer) {
  for (std::size_t i = 0; i < layer.size(); ++i)
    if (!std::isfinite(layer[i])) return i;
  return layer.size();
}

}  // namespace

LayerInterpolant::LayerInterpolant(const SplineAxis* pension, const SplineAxis* prev_wage, const SplineAxis* wage,
                                   int n_tis, std::span<const double> layer_values)
    : n_tis_(n_tis) {
  const int P = pension->size(), Q = prev_wage->size(), W = wage->size();
  std::vector<double> slab(static_cast<std::size_t>(P) * Q * W);
  splines_.reserve(kEmploymentCount * n_tis);
  for (int e = 0; e < kEmploymentCount; ++e) {
    for (int t = 0; t < n_tis; ++t) {
      for (int p = 0; p < P; ++p)
        for (int q = 0; q < Q; ++q)
          for (int w = 0; w < W; ++w) {
            const std::size_t src = ((((static_cast<std::size_t>(e) * P + p) * Q + q) * n_tis + t) * W + w);
            slab[(static_cast<std::size_t>(p) * Q + q) * W + w] = layer_values[src];
          }
      splines_.emplace_back(pension, prev_wage, wage, slab);
    }
  }
}

ValueGrid::ValueGrid(GridSpec grid, int start_age, int end_age, std::uint64_t config_hash)
    : grid_(grid),
      start_age_(start_age),
      end_age_(end_age),
      config_hash_(config_hash),
      axes_(std::make_unique<Axes>(
          Axes{SplineAxis(grid.pension_knots()), SplineAxis(grid.prev_wage_knots()), SplineAxis(grid.wage_knots())})),
      layer_size_(static_cast<std::size_t>(kEmploymentCount) * grid.n_pension * grid.n_prev_wage * grid.n_tis *
                  grid.n_wage),
      values_(layer_size_ * (end_age - start_age + 1), 0.0),
      actions_(layer_size_ * (end_age - start_age), 0),
      lazy_(std::make_unique<LazyLayer[]>(end_age - start_age + 1)) {}

std::size_t ValueGrid::index(Employment e, int p, int q, int t, int w) const {
  return (((static_cast<std::size_t>(e) * grid_.n_pension + p) * grid_.n_prev_wage + q) * grid_.n_tis + t) *
             grid_.n_wage +
         w;
}

std::span<double> ValueGrid::layer(int age) {
  return std::span(values_).subspan((age - start_age_) * layer_size_, layer_size_);
}
std::span<const double> ValueGrid::layer(int age) const {
  return std::span(values_).subspan((age - start_age_) * layer_size_, layer_size_);
}
std::span<std::uint8_t> ValueGrid::action_layer(int age) {
  if (age >= end_age_) throw ModelError("ValueGrid: no actions stored for the terminal layer");
  return std::span(actions_).subspan((age - start_age_) * layer_size_, layer_size_);
}
std::span<const std::uint8_t> ValueGrid::action_layer(int age) const {
  if (age >= end_age_) throw ModelError("ValueGrid: no actions stored for the terminal layer");
  return std::span(actions_).subspan((age - start_age_) * layer_size_, layer_size_);
}

double ValueGrid::value(int age, Employment e, int p, int q, int t, int w) const {
  return layer(age)[index(e, p, q, t, w)];
}

Action ValueGrid::action(int age, Employment e, int p, int q, int t, int w) const {
  return static_cast<Action>(action_layer(age)[index(e, p, q, t, w)]);
}

int ValueGrid::tis_knot(int time_in_state) const { return std::min(time_in_state, grid_.n_tis - 1); }

const LayerInterpolant& ValueGrid::interpolant(int age) const {
  if (age < start_age_ || age > end_age_) throw ModelError("ValueGrid: age outside solved horizon");
  LazyLayer& l = lazy_[age - start_age_];
  std::call_once(l.once, [&] {
    l.interp = std::make_unique<LayerInterpolant>(&axes_->pension, &axes_->prev_wage, &axes_->wage, grid_.n_tis,
                                                  layer(age));
  });
  return *l.interp;
}

double ValueGrid::interpolate(const AgentState& s) const {
  return interpolant(s.age).slice(s.employment, tis_knot(s.time_in_state))(s.pension, s.prev_wage, s.wage);
}

ValueGrid backward_induct(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto& g = cfg.grid;
  ValueGrid vg(g, cfg.model.start_age, cfg.model.end_age, cfg.hash());
  fill_terminal_layer(vg, cfg);
  const std::size_t working = 2 * static_cast<std::size_t>(g.n_pension) * g.n_prev_wage * g.n_tis * g.n_wage;
  for (int age = cfg.model.end_age - 1; age >= cfg.model.start_age; --age) {
    const FastContinuation cont{vg, vg.interpolant(age + 1)};
#pragma omp parallel
    {
      // thread-local copy: the functor is stateless apart from references
      FastContinuation local = cont;
#pragma omp for schedule(static) nowait
      for (std::size_t idx = 0; idx < working; ++idx) {
        std::size_t r = idx;
        const int w = static_cast<int>(r % g.n_wage);
        r /= g.n_wage;
        const int t = static_cast<int>(r % g.n_tis);
        r /= g.n_tis;
        const int q = static_cast<int>(r % g.n_prev_wage);
        r /= g.n_prev_wage;
        const int p = static_cast<int>(r % g.n_pension);
        const auto e = static_cast<Employment>(r / g.n_pension);
        solve_knot(vg, cfg, age, idx, knot_state(vg, age, e, p, q, t, w), local);
      }
#pragma omp for schedule(static)
      for (int p = 0; p < g.n_pension; ++p) fill_retired(vg, cfg, age, p, local);
    }
    const std::size_t bad = first_non_finite(vg.layer(age));
    if (bad != vg.layer_size()) report_non_finite(vg, age, bad);
  }
  return vg;
}

ValueGrid backward_induct_reference(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto& g = cfg.grid;
  ValueGrid vg(g, cfg.model.start_age, cfg.model.end_age, cfg.hash());
  fill_terminal_layer(vg, cfg);
  const auto pk = g.pension_knots(), qk = g.prev_wage_knots(), wk = g.wage_knots();
  const std::size_t slab_size = pk.size() * qk.size() * wk.size();
  for (int age = cfg.model.end_age - 1; age >= cfg.model.start_age; --age) {
    // gather the next layer into (employment, tis) slabs
    const auto next = vg.layer(age + 1);
    std::vector<std::vector<double>> slabs(kEmploymentCount * g.n_tis, std::vector<double>(slab_size));
    for (int e = 0; e < kEmploymentCount; ++e)
      for (int t = 0; t < g.n_tis; ++t)
        for (int p = 0; p < g.n_pension; ++p)
          for (int q = 0; q < g.n_prev_wage; ++q)
            for (int w = 0; w < g.n_wage; ++w)
              slabs[e * g.n_tis + t][(static_cast<std::size_t>(p) * g.n_prev_wage + q) * g.n_wage + w] =
                  next[vg.index(static_cast<Employment>(e), p, q, t, w)];
    auto cont = [&](Employment e, int tis, double pension, double prev_wage, std::span<const QuadratureNode> nodes) {
      const auto& slab = slabs[static_cast<int>(e) * g.n_tis + vg.tis_knot(tis)];
      double ev = 0.0;
      for (const auto& n : nodes) ev += n.weight * interpolate_nested(pk, qk, wk, slab, pension, prev_wage, n.value);
      return ev;
    };
    for (int e = 0; e < 2; ++e)
      for (int p = 0; p < g.n_pension; ++p)
        for (int q = 0; q < g.n_prev_wage; ++q)
          for (int t = 0; t < g.n_tis; ++t)
            for (int w = 0; w < g.n_wage; ++w) {
              const auto emp = static_cast<Employment>(e);
              solve_knot(vg, cfg, age, vg.index(emp, p, q, t, w), knot_state(vg, age, emp, p, q, t, w), cont);
            }
    for (int p = 0; p < g.n_pension; ++p) fill_retired(vg, cfg, age, p, cont);
    const std::size_t bad = first_non_finite(vg.layer(age));
    if (bad != vg.layer_size()) report_non_finite(vg, age, bad);
  }
  return vg;
}

std::array<double, kActionCount> action_values(const ValueGrid& vg, const ScenarioConfig& cfg,
                                               const AgentState& s) {
  if (s.age < vg.start_age() || s.age >= vg.end_age())
    throw ModelError("action_values: age " + std::to_string(s.age) + " is not a decision age");
  FastContinuation cont{vg, vg.interpolant(s.age + 1)};
  return evaluate_actions(cfg, s, cont);
}

Action greedy_action(const ValueGrid& vg, const ScenarioConfig& cfg, const AgentState& s) {
  if (s.employment == Employment::Retired) return Action::Stay;
  return argmax(action_values(vg, cfg, s));
}

PolicyMap policy_map(const ValueGrid& vg, int age, Employment e) {
  const auto& g = vg.grid();
  const int q = g.map_prev_wage_knot < 0 ? (g.n_prev_wage - 1) / 2 : g.map_prev_wage_knot;
  const int t = g.map_tis_knot;
  PolicyMap map;
  map.age = age;
  map.employment = e;
  map.pension = vg.pension_knots();
  map.wage = vg.wage_knots();
  map.actions.resize(map.pension.size() * map.wage.size());
  for (int p = 0; p < g.n_pension; ++p)
    for (int w = 0; w < g.n_wage; ++w) map.actions[static_cast<std::size_t>(p) * g.n_wage + w] = vg.action(age, e, p, q, t, w);
  return map;
}

}  // namespace lcm
