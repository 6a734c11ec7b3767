#include "lcm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lcm {

using nlohmann::json;

namespace {

std::vector<double> axis(double origin_month, double step_month, int n) {
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) k[i] = 12.0 * (origin_month + step_month * i);
  return k;
}

// Reads keys out of one JSON object and reports any left unconsumed.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_, "expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key), std::string("bad value (") + e.what() + ")");
    }
  }

  const json* child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_model(const json& j, ModelParams& m) {
  Section s(j, "model");
  s.read("kappa", m.reward.kappa);
  s.read("gamma", m.reward.gamma);
  s.read("reward_scale", m.reward.reward_scale);
  s.read("min_retirement_age", m.min_retirement_age);
  s.read("tis_cap", m.tis_cap);
  s.read("start_age", m.start_age);
  s.read("end_age", m.end_age);
  s.finish();
}

void read_wage(const json& j, WageProcessParams& w) {
  Section s(j, "wage");
  s.read("rho", w.rho);
  s.read("sigma", w.sigma);
  s.read("initial_sigma", w.initial_sigma);
  s.read("profile_intercept", w.profile_intercept);
  s.read("profile_slope", w.profile_slope);
  s.read("profile_curvature", w.profile_curvature);
  s.read("unemployment_penalty", w.unemployment_penalty);
  s.read("wage_floor", w.wage_floor);
  s.read("wage_cap", w.wage_cap);
  s.finish();
}

void read_terminal(const json& j, TerminalParams& t) {
  Section s(j, "terminal");
  s.read("max_age", t.max_age);
  s.read("hazard_scale", t.hazard_scale);
  s.read("hazard_growth", t.hazard_growth);
  s.read("survival", t.survival);
  s.finish();
}

void read_fiscal(const json& j, FiscalRules& f) {
  Section s(j, "fiscal");
  s.read("ss_contribution_rate", f.ss_contribution_rate);
  if (const json* b = s.child("tax_brackets")) {
    if (!b->is_array()) throw ConfigError("fiscal.tax_brackets", "expected an array of [threshold, rate]");
    f.tax_brackets.clear();
    for (const auto& row : *b) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        throw ConfigError("fiscal.tax_brackets", "expected [threshold, rate] pairs");
      f.tax_brackets.push_back({row[0].get<double>(), row[1].get<double>()});
    }
  }
  s.read("basic_ui_benefit", f.basic_ui_benefit);
  s.read("er_replacement_rate", f.er_replacement_rate);
  s.read("er_cap_fraction", f.er_cap_fraction);
  s.read("guarantee_pension", f.guarantee_pension);
  s.read("net_floor", f.net_floor);
  s.read("accrual_employed", f.accrual_employed);
  s.read("accrual_unemployed", f.accrual_unemployed);
  s.read("ubi_enabled", f.ubi_enabled);
  s.read("ubi_amount", f.ubi_amount);
  s.read("flat_tax_rate", f.flat_tax_rate);
  s.finish();
}

void read_grid(const json& j, GridSpec& g) {
  Section s(j, "grid");
  s.read("n_pension", g.n_pension);
  s.read("n_prev_wage", g.n_prev_wage);
  s.read("n_wage", g.n_wage);
  s.read("n_tis", g.n_tis);
  s.read("pension_origin", g.pension_origin);
  s.read("pension_step", g.pension_step);
  s.read("prev_wage_origin", g.prev_wage_origin);
  s.read("prev_wage_step", g.prev_wage_step);
  s.read("wage_origin", g.wage_origin);
  s.read("wage_step", g.wage_step);
  s.read("quadrature_nodes", g.quadrature_nodes);
  s.read("map_prev_wage_knot", g.map_prev_wage_knot);
  s.read("map_tis_knot", g.map_tis_knot);
  s.finish();
}

void read_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.read("total_env_steps", t.total_env_steps);
  s.read("batch_episodes", t.batch_episodes);
  s.read("learning_rate_policy", t.learning_rate_policy);
  s.read("learning_rate_value", t.learning_rate_value);
  s.read("entropy_coefficient", t.entropy_coefficient);
  s.read("gradient_clip_norm", t.gradient_clip_norm);
  s.read("momentum", t.momentum);
  std::string opt;
  s.read("optimizer", opt);
  if (!opt.empty()) {
    if (opt == "sgd_momentum")
      t.optimizer = Optimizer::SgdMomentum;
    else if (opt == "adam")
      t.optimizer = Optimizer::Adam;
    else
      throw ConfigError("train.optimizer", "expected \"sgd_momentum\" or \"adam\"");
  }
  s.read("normalize_advantages", t.normalize_advantages);
  s.read("seed", t.seed);
  s.read("policy_hidden", t.policy_hidden);
  s.read("value_hidden", t.value_hidden);
  s.read("leaky_slope", t.leaky_slope);
  s.read("wage_ref", t.wage_ref);
  s.read("pension_ref", t.pension_ref);
  s.finish();
}

void read_simulation(const json& j, SimulationSpec& sim) {
  Section s(j, "simulation");
  s.read("runs", sim.runs);
  s.read("agents", sim.agents);
  s.read("seed", sim.seed);
  s.read("report_population", sim.report_population);
  s.read("map_ages", sim.map_ages);
  s.finish();
}

json model_json(const ScenarioConfig& c, bool with_reform) {
  const auto& m = c.model;
  json model = {{"kappa", m.reward.kappa},         {"gamma", m.reward.gamma},
                {"reward_scale", m.reward.reward_scale}, {"tis_cap", m.tis_cap},
                {"start_age", m.start_age},        {"end_age", m.end_age}};
  if (with_reform) model["min_retirement_age"] = m.min_retirement_age;
  const auto& w = m.wage;
  json wage = {{"rho", w.rho},
               {"sigma", w.sigma},
               {"initial_sigma", w.initial_sigma},
               {"profile_intercept", w.profile_intercept},
               {"profile_slope", w.profile_slope},
               {"profile_curvature", w.profile_curvature},
               {"unemployment_penalty", w.unemployment_penalty},
               {"wage_floor", w.wage_floor},
               {"wage_cap", w.wage_cap}};
  const auto& t = m.terminal;
  json terminal = {{"max_age", t.max_age},
                   {"hazard_scale", t.hazard_scale},
                   {"hazard_growth", t.hazard_growth},
                   {"survival", t.survival}};
  const auto& f = c.fiscal;
  json brackets = json::array();
  for (const auto& b : f.tax_brackets) brackets.push_back({b.threshold, b.rate});
  json fiscal = {{"ss_contribution_rate", f.ss_contribution_rate},
                 {"tax_brackets", brackets},
                 {"basic_ui_benefit", f.basic_ui_benefit},
                 {"er_replacement_rate", f.er_replacement_rate},
                 {"er_cap_fraction", f.er_cap_fraction},
                 {"guarantee_pension", f.guarantee_pension},
                 {"net_floor", f.net_floor},
                 {"accrual_employed", f.accrual_employed},
                 {"accrual_unemployed", f.accrual_unemployed}};
  if (with_reform) {
    fiscal["ubi_enabled"] = f.ubi_enabled;
    fiscal["ubi_amount"] = f.ubi_amount;
    fiscal["flat_tax_rate"] = f.flat_tax_rate;
  }
  const auto& g = c.grid;
  json grid = {{"n_pension", g.n_pension},
               {"n_prev_wage", g.n_prev_wage},
               {"n_wage", g.n_wage},
               {"n_tis", g.n_tis},
               {"pension_origin", g.pension_origin},
               {"pension_step", g.pension_step},
               {"prev_wage_origin", g.prev_wage_origin},
               {"prev_wage_step", g.prev_wage_step},
               {"wage_origin", g.wage_origin},
               {"wage_step", g.wage_step},
               {"quadrature_nodes", g.quadrature_nodes},
               {"map_prev_wage_knot", g.map_prev_wage_knot},
               {"map_tis_knot", g.map_tis_knot}};
  const auto& tr = c.train;
  json train = {{"total_env_steps", tr.total_env_steps},
                {"batch_episodes", tr.batch_episodes},
                {"learning_rate_policy", tr.learning_rate_policy},
                {"learning_rate_value", tr.learning_rate_value},
                {"entropy_coefficient", tr.entropy_coefficient},
                {"gradient_clip_norm", tr.gradient_clip_norm},
                {"momentum", tr.momentum},
                {"optimizer", tr.optimizer == Optimizer::Adam ? "adam" : "sgd_momentum"},
                {"normalize_advantages", tr.normalize_advantages},
                {"seed", tr.seed},
                {"policy_hidden", tr.policy_hidden},
                {"value_hidden", tr.value_hidden},
                {"leaky_slope", tr.leaky_slope},
                {"wage_ref", tr.wage_ref},
                {"pension_ref", tr.pension_ref}};
  return json{{"model", model}, {"wage", wage},   {"terminal", terminal},
              {"fiscal", fiscal}, {"grid", grid}, {"train", train}};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> GridSpec::pension_knots() const { return axis(pension_origin, pension_step, n_pension); }
std::vector<double> GridSpec::prev_wage_knots() const {
  return axis(prev_wage_origin, prev_wage_step, n_prev_wage);
}
std::vector<double> GridSpec::wage_knots() const { return axis(wage_origin, wage_step, n_wage); }

GridSpec GridSpec::refined() const {
  GridSpec g = *this;
  g.n_pension = 2 * n_pension - 1;
  g.pension_step = pension_step / 2.0;
  g.n_wage = 2 * n_wage - 1;
  g.wage_step = wage_step / 2.0;
  return g;
}

void validate(const GridSpec& g) {
  if (g.n_pension < 2 || g.n_prev_wage < 2 || g.n_wage < 2)
    throw ConfigError("grid", "pension, prev_wage and wage axes need at least 2 knots");
  if (g.n_tis < 1) throw ConfigError("grid.n_tis", "must be >= 1");
  if (!(g.pension_step > 0.0 && g.prev_wage_step > 0.0 && g.wage_step > 0.0))
    throw ConfigError("grid", "steps must be > 0");
  if (g.quadrature_nodes < 1 || g.quadrature_nodes > 64)
    throw ConfigError("grid.quadrature_nodes", "must lie in [1, 64]");
  if (g.map_prev_wage_knot >= g.n_prev_wage) throw ConfigError("grid.map_prev_wage_knot", "out of range");
  if (g.map_tis_knot < 0 || g.map_tis_knot >= g.n_tis) throw ConfigError("grid.map_tis_knot", "out of range");
}

void validate(const TrainConfig& t) {
  if (t.total_env_steps <= 0) throw ConfigError("train.total_env_steps", "must be > 0");
  if (t.batch_episodes <= 0) throw ConfigError("train.batch_episodes", "must be > 0");
  if (!(t.learning_rate_policy > 0.0)) throw ConfigError("train.learning_rate_policy", "must be > 0");
  if (!(t.learning_rate_value > 0.0)) throw ConfigError("train.learning_rate_value", "must be > 0");
  if (!(t.entropy_coefficient >= 0.0)) throw ConfigError("train.entropy_coefficient", "must be >= 0");
  if (!(t.gradient_clip_norm > 0.0)) throw ConfigError("train.gradient_clip_norm", "must be > 0");
  if (!(t.momentum >= 0.0 && t.momentum < 1.0)) throw ConfigError("train.momentum", "must lie in [0,1)");
  for (int w : t.policy_hidden)
    if (w <= 0) throw ConfigError("train.policy_hidden", "layer widths must be positive");
  for (int w : t.value_hidden)
    if (w <= 0) throw ConfigError("train.value_hidden", "layer widths must be positive");
  if (!(t.leaky_slope >= 0.0)) throw ConfigError("train.leaky_slope", "must be >= 0");
  if (!(t.wage_ref > 0.0 && t.pension_ref > 0.0)) throw ConfigError("train", "wage_ref and pension_ref must be > 0");
}

void validate(const ScenarioConfig& c) {
  try {
    validate(c.model);
    validate(c.fiscal);
  } catch (const ModelError& e) {
    throw ConfigError("", e.what());
  }
  validate(c.grid);
  validate(c.train);
  const auto& g = c.grid;
  const auto wk = g.wage_knots();
  if (wk.front() > c.model.wage.wage_floor)
    throw ConfigError("grid.wage_origin", "wage grid must start at or below wage.wage_floor");
  if (g.prev_wage_knots().front() > 0.0)
    throw ConfigError("grid.prev_wage_origin", "prev_wage grid must include 0 (never employed)");
  if (g.pension_knots().front() > 0.0)
    throw ConfigError("grid.pension_origin", "pension grid must include 0");
  if (c.simulation.runs < 1) throw ConfigError("simulation.runs", "must be >= 1");
  if (c.simulation.agents < 1) throw ConfigError("simulation.agents", "must be >= 1");
  if (c.simulation.report_population < 1) throw ConfigError("simulation.report_population", "must be >= 1");
  for (int a : c.simulation.map_ages)
    if (a < c.model.start_age || a >= c.model.end_age)
      throw ConfigError("simulation.map_ages", "ages must be decision ages");
}

ScenarioConfig default_config(Preset preset) {
  ScenarioConfig c;
  if (preset == Preset::Desk) {
    // same axis ranges as the full grid, fewer knots
    c.grid.n_pension = 10;
    c.grid.pension_step = 417.0 * 19.0 / 9.0;
    c.grid.n_prev_wage = 8;
    c.grid.prev_wage_step = 701.0 * 19.0 / 7.0;
    c.grid.n_wage = 12;
    c.grid.wage_step = 701.0 * 24.0 / 11.0;
    c.train.total_env_steps = 1'000'000;
    c.simulation.runs = 3;
    c.simulation.agents = 10000;
  } else {
    c.train.total_env_steps = 10'000'000;
    c.simulation.runs = 10;
    c.simulation.agents = 50000;
  }
  return c;
}

ScenarioConfig parse_config(std::string_view text, Preset preset) {
  ScenarioConfig c = default_config(preset);
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (!blank) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("unparseable configuration: ") + e.what());
    }
    Section top(j, "");
    top.read("name", c.name);
    if (const json* s = top.child("model")) read_model(*s, c.model);
    if (const json* s = top.child("wage")) read_wage(*s, c.model.wage);
    if (const json* s = top.child("terminal")) read_terminal(*s, c.model.terminal);
    if (const json* s = top.child("fiscal")) read_fiscal(*s, c.fiscal);
    if (const json* s = top.child("grid")) read_grid(*s, c.grid);
    if (const json* s = top.child("train")) read_train(*s, c.train);
    if (const json* s = top.child("simulation")) read_simulation(*s, c.simulation);
    top.finish();
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, Preset preset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open configuration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), preset);
}

std::string to_json(const ScenarioConfig& c, int indent) {
  json j = model_json(c, true);
  j["name"] = c.name;
  j["simulation"] = {{"runs", c.simulation.runs},
                     {"agents", c.simulation.agents},
                     {"seed", c.simulation.seed},
                     {"report_population", c.simulation.report_population},
                     {"map_ages", c.simulation.map_ages}};
  return j.dump(indent);
}

std::uint64_t ScenarioConfig::hash() const { return fnv1a(model_json(*this, true).dump()); }
std::uint64_t ScenarioConfig::base_hash() const { return fnv1a(model_json(*this, false).dump()); }

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xf];
  return s;
}

}  // namespace lcm
