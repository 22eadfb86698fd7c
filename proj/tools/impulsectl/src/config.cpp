#include "impulsectl/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "impulse/errors.hpp"

namespace impulsectl {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ':' << node.Mark().line + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void expect_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, path + " must be a mapping");
  }

  void only_keys(const YAML::Node& node, const std::string& path,
                 std::initializer_list<const char*> allowed) const {
    expect_map(node, path);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      const bool known = std::any_of(allowed.begin(), allowed.end(),
                                     [&](const char* k) { return key == k; });
      if (!known) fail(kv.first, "unknown key '" + path + "." + key + "'");
    }
  }

  double real(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path + " must be a number");
    try {
      const double v = node.as<double>();
      if (std::isnan(v)) fail(node, path + " must be a number");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(node, path + " must be a number, got '" + node.Scalar() + "'");
    }
  }

  double positive(const YAML::Node& node, const std::string& path) const {
    const double v = real(node, path);
    if (!(v > 0.0) || !std::isfinite(v)) fail(node, path + " must be positive and finite");
    return v;
  }

  double non_negative(const YAML::Node& node, const std::string& path) const {
    const double v = real(node, path);
    if (!(v >= 0.0) || !std::isfinite(v)) fail(node, path + " must be non-negative and finite");
    return v;
  }

  std::size_t count(const YAML::Node& node, const std::string& path, std::size_t min) const {
    const double v = real(node, path);
    if (v != std::floor(v) || v < static_cast<double>(min) || v > 1e9) {
      fail(node, path + " must be an integer >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v);
  }

  std::string text(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path + " must be a string");
    return node.Scalar();
  }

  impulse::Interval interval(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, path + " must be [lo, hi]");
    const impulse::Interval out{real(node[0], path + "[0]"), real(node[1], path + "[1]")};
    if (!(out.lo < out.hi) || !std::isfinite(out.lo) || !std::isfinite(out.hi)) {
      fail(node, path + " must satisfy lo < hi");
    }
    return out;
  }

 private:
  std::string source_;
};

void read_inventory(const Reader& r, const YAML::Node& m, RunConfig& cfg) {
  r.only_keys(m, "model",
              {"kind", "demand", "setup_cost", "holding_cost", "discount", "capacity"});
  auto& p = cfg.inventory;
  if (m["demand"]) p.demand_rate = r.positive(m["demand"], "model.demand");
  if (m["setup_cost"]) p.setup_cost = r.positive(m["setup_cost"], "model.setup_cost");
  if (m["holding_cost"]) p.holding_cost = r.positive(m["holding_cost"], "model.holding_cost");
  if (m["discount"]) p.discount = r.positive(m["discount"], "model.discount");
  if (m["capacity"]) p.capacity = r.positive(m["capacity"], "model.capacity");
}

void read_generic(const Reader& r, const YAML::Node& m, RunConfig& cfg) {
  r.only_keys(m, "model", {"kind", "states", "actions", "discount", "flow", "jump", "costs"});
  auto& g = cfg.generic;
  if (m["states"]) g.states = r.interval(m["states"], "model.states");
  if (m["actions"]) g.actions = r.interval(m["actions"], "model.actions");
  if (g.actions.lo < 0.0) r.fail(m["actions"], "model.actions must be non-negative");
  if (m["discount"]) g.discount = r.positive(m["discount"], "model.discount");

  if (const auto flow = m["flow"]) {
    r.only_keys(flow, "model.flow", {"kind", "rate"});
    if (flow["kind"]) {
      g.flow = r.text(flow["kind"], "model.flow.kind");
      if (g.flow != "linear_decay" && g.flow != "exponential_decay") {
        r.fail(flow["kind"], "model.flow.kind must be linear_decay or exponential_decay");
      }
    }
    if (flow["rate"]) g.flow_rate = r.positive(flow["rate"], "model.flow.rate");
  }
  if (m["jump"]) {
    g.jump = r.text(m["jump"], "model.jump");
    if (g.jump != "add_clamp") r.fail(m["jump"], "model.jump must be add_clamp");
  }

  const auto costs = m["costs"];
  if (!costs || !costs.IsSequence() || costs.size() < 1) {
    r.fail(costs ? costs : m, "model.costs must be a non-empty list");
  }
  for (std::size_t j = 0; j < costs.size(); ++j) {
    const auto item = costs[j];
    const std::string path = "model.costs[" + std::to_string(j) + "]";
    r.only_keys(item, path, {"gradual", "lump"});
    CostTerm t;
    if (const auto gr = item["gradual"]) {
      r.only_keys(gr, path + ".gradual", {"constant", "linear", "at_lower"});
      if (gr["constant"]) t.constant = r.real(gr["constant"], path + ".gradual.constant");
      if (gr["linear"]) t.linear = r.real(gr["linear"], path + ".gradual.linear");
      if (gr["at_lower"]) t.at_lower = r.real(gr["at_lower"], path + ".gradual.at_lower");
    }
    if (const auto lu = item["lump"]) {
      r.only_keys(lu, path + ".lump", {"fixed", "per_unit"});
      if (lu["fixed"]) t.fixed = r.real(lu["fixed"], path + ".lump.fixed");
      if (lu["per_unit"]) t.per_unit = r.real(lu["per_unit"], path + ".lump.per_unit");
    }
    g.costs.push_back(t);
  }
}

}  // namespace

impulse::ImpulseModel RunConfig::build_model() const {
  if (kind == ModelKind::inventory) return impulse::inventory::make_model(inventory);

  const auto& g = generic;
  impulse::ImpulseModel m;
  m.name = "generic";
  m.states = g.states;
  m.actions = g.actions;
  m.alpha = g.discount;
  const double lo = g.states.lo;
  const double hi = g.states.hi;
  const double rate = g.flow_rate;
  const double at_lower_eps = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (g.flow == "linear_decay") {
    m.flow = [lo, rate](double x, double t) { return std::max(x - rate * t, lo); };
    m.kink_times = [lo, rate, at_lower_eps](double x) {
      return x - lo > at_lower_eps ? std::vector<double>{(x - lo) / rate} : std::vector<double>{};
    };
    m.traversal_time = (hi - lo) / rate;
  } else {
    m.flow = [lo, rate](double x, double t) { return lo + (x - lo) * std::exp(-rate * t); };
    m.traversal_time = 1.0 / rate;
  }
  m.jump = [hi](double x, double a) { return std::min(x + a, hi); };

  const double x_abs = std::max(std::abs(lo), std::abs(hi));
  double gradual_bound = 0.0;
  double lump_bound = 0.0;
  for (const auto& t : g.costs) {
    m.gradual_costs.emplace_back([t, lo, at_lower_eps](double x) {
      double c = t.constant + t.linear * x;
      if (x - lo <= at_lower_eps) c += t.at_lower;
      return c;
    });
    m.lump_costs.emplace_back([t](double, double a) { return t.fixed + t.per_unit * a; });
    gradual_bound = std::max(gradual_bound,
                             std::abs(t.constant) + std::abs(t.linear) * x_abs + std::abs(t.at_lower));
    lump_bound = std::max(lump_bound, std::abs(t.fixed) + std::abs(t.per_unit) * g.actions.hi);
  }
  m.gradual_cost_bound = gradual_bound;
  m.lump_cost_bound = lump_bound;
  m.validate();
  return m;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  cfg.source = source;
  if (root.IsNull()) return cfg;
  r.only_keys(root, "config", {"model", "solve", "grid", "policy", "verify", "output"});

  if (const auto m = root["model"]) {
    r.expect_map(m, "model");
    std::string kind = "inventory";
    if (m["kind"]) kind = r.text(m["kind"], "model.kind");
    if (kind == "inventory") {
      cfg.kind = ModelKind::inventory;
      read_inventory(r, m, cfg);
    } else if (kind == "generic") {
      cfg.kind = ModelKind::generic;
      read_generic(r, m, cfg);
    } else {
      r.fail(m["kind"], "model.kind must be inventory or generic");
    }
  }

  const auto s = root["solve"];
  if (s) {
    r.only_keys(s, "solve", {"d", "engine", "tol", "cert_tol", "mc_paths"});
    if (s["d"]) cfg.solve.d = r.non_negative(s["d"], "solve.d");
    if (s["engine"]) {
      const auto e = r.text(s["engine"], "solve.engine");
      if (e == "closed_form") {
        cfg.solve.engine = impulse::EngineKind::closed_form;
      } else if (e == "grid") {
        cfg.solve.engine = impulse::EngineKind::grid;
      } else {
        r.fail(s["engine"], "solve.engine must be closed_form or grid");
      }
    }
    if (s["tol"]) cfg.solve.search_tol = r.positive(s["tol"], "solve.tol");
    if (s["cert_tol"]) cfg.solve.cert_tol = r.positive(s["cert_tol"], "solve.cert_tol");
    if (s["mc_paths"]) cfg.solve.mc_paths = r.count(s["mc_paths"], "solve.mc_paths", 0);
  }
  if (cfg.kind == ModelKind::generic) {
    if (cfg.solve.engine == impulse::EngineKind::closed_form) {
      if (s && s["engine"]) {
        r.fail(s["engine"], "closed_form engine is only available for the inventory model");
      }
      cfg.solve.engine = impulse::EngineKind::grid;
    }
    if (cfg.generic.costs.size() != 2) {
      r.fail(root["model"], "model.costs must list exactly two costs (objective and one constraint)");
    }
  }

  if (const auto g = root["grid"]) {
    r.only_keys(g, "grid", {"n_states", "n_theta", "n_actions", "theta_max", "tol", "max_iter"});
    if (g["n_states"]) cfg.grid.spec.n_states = r.count(g["n_states"], "grid.n_states", 2);
    if (g["n_theta"]) cfg.grid.spec.n_theta = r.count(g["n_theta"], "grid.n_theta", 2);
    if (g["n_actions"]) cfg.grid.spec.n_actions = r.count(g["n_actions"], "grid.n_actions", 2);
    if (g["theta_max"]) cfg.grid.spec.theta_max = r.positive(g["theta_max"], "grid.theta_max");
    if (g["tol"]) cfg.grid.tol = r.positive(g["tol"], "grid.tol");
    if (g["max_iter"]) cfg.grid.max_iter = r.count(g["max_iter"], "grid.max_iter", 1);
  }

  if (const auto p = root["policy"]) {
    r.only_keys(p, "policy", {"tau", "order"});
    PolicyConfig pol;
    if (p["tau"]) {
      if (p["tau"].IsScalar() && p["tau"].Scalar() == "inf") {
        pol.tau = impulse::Theta::never();
      } else {
        pol.tau = impulse::Theta::after(r.non_negative(p["tau"], "policy.tau"));
      }
    }
    if (p["order"]) pol.order = r.non_negative(p["order"], "policy.order");
    cfg.policy = pol;
  }

  if (const auto v = root["verify"]) {
    r.only_keys(v, "verify", {"grid_tol", "window_hi", "g", "mc_paths"});
    if (v["grid_tol"]) cfg.verify.grid_tol = r.positive(v["grid_tol"], "verify.grid_tol");
    if (v["window_hi"]) cfg.verify.window_hi = r.positive(v["window_hi"], "verify.window_hi");
    if (const auto gl = v["g"]) {
      if (!gl.IsSequence()) r.fail(gl, "verify.g must be a list of multipliers");
      cfg.verify.g_values.clear();
      for (std::size_t i = 0; i < gl.size(); ++i) {
        cfg.verify.g_values.push_back(r.non_negative(gl[i], "verify.g[" + std::to_string(i) + "]"));
      }
    }
    if (v["mc_paths"]) cfg.verify.mc_paths = r.count(v["mc_paths"], "verify.mc_paths", 0);
  }

  if (const auto o = root["output"]) {
    r.only_keys(o, "output", {"dir"});
    if (o["dir"]) cfg.output_dir = r.text(o["dir"], "output.dir");
  }

  cfg.inventory.holding_limit = cfg.solve.d;
  const YAML::Node model_node = root["model"] ? root["model"] : root;
  if (cfg.kind == ModelKind::inventory) {
    const auto& p = cfg.inventory;
    if (!p.never_orders()) {
      double required = 0.0;
      try {
        required = impulse::inventory::min_capacity(p);
      } catch (const impulse::Error& e) {
        r.fail(model_node, e.what());
      }
      if (p.capacity < required) {
        std::ostringstream os;
        os.precision(6);
        os << "capacity error: model.capacity=" << p.capacity << " is below the " << required
           << " the optimal order needs at d=" << p.holding_limit;
        r.fail(model_node["capacity"] ? model_node["capacity"] : model_node, os.str());
      }
    }
  } else {
    try {
      (void)cfg.build_model();
    } catch (const impulse::Error& e) {
      r.fail(model_node, e.what());
    }
  }
  if (cfg.policy && !cfg.policy->tau.is_never()) {
    const double hi = cfg.kind == ModelKind::inventory ? cfg.inventory.capacity
                                                       : cfg.generic.actions.hi;
    if (cfg.policy->order > hi) r.fail(root["policy"]["order"], "policy.order exceeds the action range");
    if (cfg.kind == ModelKind::inventory && cfg.policy->order == 0.0 &&
        cfg.policy->tau.value() == 0.0) {
      r.fail(root["policy"], "policy with tau=0 and order=0 never advances the clock");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace impulsectl
