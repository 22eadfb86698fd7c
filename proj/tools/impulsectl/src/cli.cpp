#include "impulsectl/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "impulse/bellman_grid.hpp"
#include "impulse/dual.hpp"
#include "impulse/errors.hpp"
#include "impulse/inventory.hpp"
#include "impulse/occupation.hpp"
#include "impulse/rollout.hpp"

namespace impulsectl {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
namespace inv = impulse::inventory;

struct Solved {
  impulse::ImpulseModel model;
  double x0 = 0.0;
  double d = 0.0;
  std::unique_ptr<impulse::DualEngine> engine;
  std::optional<inv::InventorySolution> solution;
  impulse::StationaryStrategy strategy;
  impulse::CostVector costs;
  double cert_tol = 0.0;
  impulse::DualReport certificate;
  impulse::CertificateCheck certificate_check;
  impulse::DualReport search;
  impulse::CertificateCheck search_check;
  bool search_matches_analytic = true;

  bool pass() const {
    return certificate_check.pass && search_check.pass && search_matches_analytic;
  }
};

fs::path output_dir(const RunConfig& cfg, const CliOptions& opts) {
  fs::path dir = opts.out_dir.empty() ? cfg.output_dir : opts.out_dir;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError(path.string() + ": cannot write output file");
  return os;
}

std::string fmt(double v, int precision = 12) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

json theta_json(impulse::Theta t) {
  if (t.is_never()) return "inf";
  return t.value();
}

json model_json(const RunConfig& cfg) {
  json m;
  if (cfg.kind == ModelKind::inventory) {
    const auto& p = cfg.inventory;
    m["kind"] = "inventory";
    m["demand"] = p.demand_rate;
    m["setup_cost"] = p.setup_cost;
    m["holding_cost"] = p.holding_cost;
    m["discount"] = p.discount;
    m["capacity"] = p.capacity;
  } else {
    const auto& g = cfg.generic;
    m["kind"] = "generic";
    m["states"] = {g.states.lo, g.states.hi};
    m["actions"] = {g.actions.lo, g.actions.hi};
    m["discount"] = g.discount;
    m["flow"] = {{"kind", g.flow}, {"rate", g.flow_rate}};
    m["jump"] = g.jump;
  }
  return m;
}

json report_json(const impulse::DualReport& r, const impulse::CertificateCheck& check) {
  json j;
  j["engine"] = impulse::to_string(r.engine);
  j["g_star"] = r.g_star.at(0);
  if (r.analytic_g_star) {
    j["analytic_g_star"] = *r.analytic_g_star;
  } else {
    j["analytic_g_star"] = nullptr;
  }
  j["h_star"] = r.h_star;
  j["v0"] = r.primal_costs[0];
  j["v1"] = r.primal_costs[1];
  j["slackness"] = r.slackness;
  j["gap"] = r.gap;
  j["feasible"] = r.feasible;
  j["cert_tol"] = r.cert_tol;
  j["strategy"] = r.strategy;
  j["evaluations"] = r.evaluations;
  j["pass"] = check.pass;
  j["violations"] = check.violations;
  return j;
}

double state_origin(const RunConfig& cfg) {
  return cfg.kind == ModelKind::inventory ? 0.0 : cfg.generic.states.lo;
}

Solved solve_problem(const RunConfig& cfg, const CliOptions& opts) {
  Solved s;
  s.model = cfg.build_model();
  s.x0 = state_origin(cfg);
  s.d = cfg.solve.d;
  const bool inventory = cfg.kind == ModelKind::inventory;
  const bool closed = inventory && cfg.solve.engine == impulse::EngineKind::closed_form;
  if (closed) {
    s.engine = impulse::make_closed_form_engine(cfg.inventory);
  } else {
    s.engine = impulse::make_grid_engine(s.model, cfg.grid.spec, cfg.grid.tol, cfg.grid.max_iter);
  }
  s.cert_tol = opts.tol.value_or(cfg.solve.cert_tol.value_or(s.engine->default_cert_tol()));

  impulse::DualOptions dopt;
  dopt.search_tol = cfg.solve.search_tol;
  dopt.cert_tol = s.cert_tol;
  s.search = impulse::maximize_dual(*s.engine, s.d, s.x0, dopt);
  s.search_check = impulse::verify_certificate(s.search, s.cert_tol);

  if (inventory) s.solution = inv::solve_constrained(cfg.inventory);

  if (closed) {
    const auto& sol = *s.solution;
    s.strategy = inv::strategy_of(cfg.inventory, sol);
    s.costs = impulse::evaluate(s.model, s.strategy, impulse::State(s.x0));
    impulse::DualReport c;
    c.engine = s.engine->kind();
    c.x0 = s.x0;
    c.g_star = {sol.g_star};
    c.d = {s.d};
    c.h_star = impulse::dual_functional(*s.engine, sol.g_star, s.d, s.x0);
    c.primal_costs = s.costs;
    c.analytic_g_star = sol.g_star;
    c.strategy = s.strategy.description;
    impulse::certify(c, s.cert_tol);
    s.certificate = c;
    const double g_search = s.search.g_star[0];
    s.search_matches_analytic =
        std::abs(g_search - sol.g_star) <= 1e-6 * std::max(1.0, sol.g_star);
  } else {
    s.strategy = s.engine->primal_strategy(s.search.g_star[0], s.d, s.x0);
    s.costs = s.search.primal_costs;
    s.certificate = s.search;
  }
  s.certificate_check = impulse::verify_certificate(s.certificate, s.cert_tol);
  return s;
}

impulse::StationaryStrategy policy_strategy(const RunConfig& cfg,
                                            const impulse::ImpulseModel& model,
                                            const PolicyConfig& pol) {
  if (cfg.kind == ModelKind::inventory) {
    return inv::cyclic_strategy(cfg.inventory, pol.tau, pol.order);
  }
  impulse::StationaryStrategy f;
  if (pol.tau.is_never()) {
    f.description = "never intervene";
    const double lo = model.actions.lo;
    f.rule = [lo](double) { return impulse::ImpulseAction{impulse::Theta::never(), lo}; };
    return f;
  }
  // Wait until the flow reaches the lower end (when it does), then tau more.
  const double tau = pol.tau.value();
  const double order = pol.order;
  auto kinks = model.kink_times;
  f.description = "wait to lower end + " + fmt(tau) + ", order " + fmt(order);
  f.rule = [kinks, tau, order](double x) {
    double hit = 0.0;
    if (kinks) {
      const auto k = kinks(x);
      if (!k.empty()) hit = k.front();
    }
    return impulse::ImpulseAction{impulse::Theta::after(hit + tau), order};
  };
  return f;
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
  } catch (const impulse::Error& e) {
    log << "error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitConfig;
}

struct Check {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double tolerance = 0.0;
};

}  // namespace

std::vector<double> parse_g_list(const std::string& text) {
  std::vector<double> out;
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("--g-list: empty entry in '" + text + "'");
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("--g-list: '" + tok + "' is not a number");
    }
    if (used != tok.size()) throw ConfigError("--g-list: '" + tok + "' is not a number");
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("--g-list: multipliers must be finite and non-negative");
    }
    out.push_back(v);
  }
  return out;
}

int cmd_solve(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const fs::path dir = output_dir(cfg, opts);
    Solved s = solve_problem(cfg, opts);

    json rep;
    rep["model"] = model_json(cfg);
    rep["d"] = s.d;
    rep["x0"] = s.x0;
    rep["engine"] = impulse::to_string(s.engine->kind());
    if (s.solution) {
      const auto& sol = *s.solution;
      rep["regime"] = inv::to_string(sol.regime);
      rep["g_star"] = sol.g_star;
      rep["order_qty"] = sol.order_qty;
      rep["tau_star"] = sol.tau_star;
      rep["v0"] = sol.v0;
      rep["v1"] = sol.v1;
    } else {
      rep["regime"] = nullptr;
      rep["g_star"] = s.search.g_star[0];
    }
    rep["strategy"] = s.strategy.description;
    rep["rollout"] = {{"v0", s.costs[0]},
                      {"v1", s.costs[1]},
                      {"truncation_error", s.costs.truncation_error}};
    rep["certificate"] = report_json(s.certificate, s.certificate_check);
    rep["dual_search"] = report_json(s.search, s.search_check);
    rep["dual_search"]["matches_analytic"] = s.search_matches_analytic;

    if (cfg.solve.mc_paths > 0) {
      const auto mc = impulse::evaluate_monte_carlo(s.model, s.strategy, impulse::State(s.x0),
                                                    cfg.solve.mc_paths, opts.seed);
      rep["monte_carlo"] = {{"paths", mc.paths},
                            {"seed", opts.seed},
                            {"mean", mc.mean},
                            {"std_error", mc.std_error}};
    }
    if (cfg.policy) {
      const auto f = policy_strategy(cfg, s.model, *cfg.policy);
      const auto c = impulse::evaluate(s.model, f, impulse::State(s.x0));
      const double g[] = {s.certificate.g_star[0]};
      const double d[] = {s.d};
      rep["policy"] = {{"tau", theta_json(cfg.policy->tau)},
                       {"order", cfg.policy->order},
                       {"strategy", f.description},
                       {"v0", c[0]},
                       {"v1", c[1]},
                       {"feasible", c[1] <= s.d + s.cert_tol},
                       {"lagrangian_at_g_star", impulse::lagrangian_value(c, g, d)}};
    }
    const bool pass = s.pass();
    rep["status"] = pass ? "certified" : "certificate_failed";

    {
      auto os = open_out(dir / "report.json");
      os << rep.dump(2) << '\n';
    }
    {
      auto os = open_out(dir / "report.txt");
      os << "model        " << cfg.build_model().name << '\n';
      os << "d            " << fmt(s.d) << '\n';
      os << "engine       " << impulse::to_string(s.engine->kind()) << '\n';
      if (s.solution) {
        const auto& sol = *s.solution;
        os << "regime       " << inv::to_string(sol.regime) << '\n';
        os << "g*           " << fmt(sol.g_star) << '\n';
        os << "order        " << fmt(sol.order_qty) << '\n';
        os << "tau*         " << fmt(sol.tau_star) << '\n';
        os << "v0 (closed)  " << fmt(sol.v0) << '\n';
        os << "v1 (closed)  " << fmt(sol.v1) << '\n';
      }
      os << "strategy     " << s.strategy.description << '\n';
      os << "v0 (rollout) " << fmt(s.costs[0]) << '\n';
      os << "v1 (rollout) " << fmt(s.costs[1]) << '\n';
      os << "dual g*      " << fmt(s.search.g_star[0]) << '\n';
      os << "h(g*)        " << fmt(s.certificate.h_star) << '\n';
      os << "gap          " << fmt(s.certificate.gap, 6) << '\n';
      os << "slackness    " << fmt(s.certificate.slackness, 6) << '\n';
      os << "certificate  " << (pass ? "PASS" : "FAIL") << '\n';
      for (const auto& v : s.certificate_check.violations) os << "  " << v << '\n';
      for (const auto& v : s.search_check.violations) os << "  search: " << v << '\n';
      if (!s.search_matches_analytic) os << "  search: g* differs from the analytic optimum\n";
    }
    {
      auto os = open_out(dir / "measure.csv");
      impulse::write_measure_csv(
          os, impulse::occupation_of(s.model, s.strategy, impulse::State(s.x0)));
    }
    log << (pass ? "certified" : "certificate failed") << ": " << (dir / "report.json").string()
        << '\n';
    return pass ? kExitOk : kExitVerify;
  });
}

int cmd_trajectory(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    if (!(opts.horizon >= 0.0) || !std::isfinite(opts.horizon)) {
      throw ConfigError("--horizon must be finite and non-negative");
    }
    const fs::path dir = output_dir(cfg, opts);
    const Solved s = solve_problem(cfg, opts);
    const auto events = impulse::trajectory(s.model, s.strategy, s.x0, opts.horizon);
    auto os = open_out(dir / "trajectory.csv");
    impulse::write_trajectory_csv(os, events);
    log << events.size() << " events: " << (dir / "trajectory.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_dual_scan(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const fs::path dir = output_dir(cfg, opts);
    const auto model = cfg.build_model();
    std::unique_ptr<impulse::DualEngine> engine;
    if (cfg.kind == ModelKind::inventory &&
        cfg.solve.engine == impulse::EngineKind::closed_form) {
      engine = impulse::make_closed_form_engine(cfg.inventory);
    } else {
      engine = impulse::make_grid_engine(model, cfg.grid.spec, cfg.grid.tol, cfg.grid.max_iter);
    }
    const double x0 = state_origin(cfg);
    std::ostringstream body;
    body << std::setprecision(15) << "g,h\n";
    for (double g : opts.g_list) {
      body << g << ',' << impulse::dual_functional(*engine, g, cfg.solve.d, x0) << '\n';
    }
    auto os = open_out(dir / "dual_scan.csv");
    os << body.str();
    log << opts.g_list.size() << " rows: " << (dir / "dual_scan.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_verify(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const fs::path dir = output_dir(cfg, opts);
    std::vector<Check> checks;
    auto add = [&](std::string name, double value, double tol, bool pass) {
      checks.push_back({std::move(name), pass, value, tol});
    };
    auto at_most = [&](std::string name, double value, double tol) {
      add(std::move(name), value, tol, std::abs(value) <= tol);
    };

    const Solved s = solve_problem(cfg, opts);
    const impulse::GridOperator op(s.model, cfg.grid.spec);
    std::optional<impulse::ValueTable> first_table;

    if (cfg.kind == ModelKind::inventory) {
      const auto& p = cfg.inventory;
      std::vector<double> gs;
      if (p.never_orders()) {
        gs = {0.0};
      } else {
        for (double g : cfg.verify.g_values) {
          if (g > 0.0) gs.push_back(g);
        }
      }
      const double hi = std::min(cfg.verify.window_hi, p.capacity);
      for (double g : gs) {
        const double w[] = {g};
        auto table = impulse::value_iteration(op, w, cfg.grid.tol, cfg.grid.max_iter);
        double err = 0.0;
        for (int i = 0; i <= 300; ++i) {
          const double x = hi * i / 300.0;
          err = std::max(err, std::abs(table.value_at(x) - inv::bellman_closed_form(p, g, x)));
        }
        const std::string tag = "[g=" + fmt(g) + "]";
        at_most("grid_vs_closed_form" + tag, err, cfg.verify.grid_tol);
        const auto res = impulse::bellman_residual(s.model, w, table);
        at_most("bellman_residual" + tag, res.max_violation, cfg.verify.grid_tol);
        if (!first_table) first_table = std::move(table);
      }
      const auto& sol = *s.solution;
      const auto exact = impulse::evaluate(s.model, inv::strategy_of(p, sol), impulse::State(0.0));
      if (sol.regime != inv::Regime::never_order || s.d == 0.0) {
        at_most("constraint_active", exact[1] - s.d, 1e-8);
      } else {
        add("constraint_satisfied", exact[1] - s.d, 1e-8, exact[1] <= s.d + 1e-8);
      }
      at_most("value_identity", exact[0] - sol.v0, 1e-8);
      if (s.engine->kind() == impulse::EngineKind::closed_form) {
        at_most("dual_search_vs_analytic", s.search.g_star[0] - sol.g_star,
                1e-6 * std::max(1.0, sol.g_star));
      }
    } else {
      const double w[] = {s.search.g_star[0]};
      auto table = impulse::value_iteration(op, w, cfg.grid.tol, cfg.grid.max_iter);
      const auto res = impulse::bellman_residual(s.model, w, table);
      at_most("bellman_residual[g=" + fmt(w[0]) + "]", res.max_violation, cfg.verify.grid_tol);
      first_table = std::move(table);
    }

    add("certificate", s.certificate_check.violations.size(), 0.0, s.certificate_check.pass);
    add("dual_search_certificate", s.search_check.violations.size(), 0.0, s.search_check.pass);

    const auto mu = impulse::occupation_of(s.model, s.strategy, impulse::State(s.x0));
    at_most("characteristic_residual",
            impulse::characteristic_residual(s.model, mu, impulse::State(s.x0)), 1e-9);
    const auto integrals = impulse::cost_integrals(s.model, mu);
    double diff = 0.0;
    for (std::size_t j = 0; j < integrals.size(); ++j) {
      diff = std::max(diff, std::abs(integrals[j] - s.costs[j]));
    }
    at_most("occupation_vs_rollout", diff, 1e-9);

    if (cfg.verify.mc_paths > 0) {
      const auto mc = impulse::evaluate_monte_carlo(s.model, s.strategy, impulse::State(s.x0),
                                                    cfg.verify.mc_paths, opts.seed);
      for (std::size_t j = 0; j < mc.mean.size(); ++j) {
        const double tol = 5.0 * mc.std_error[j] + 1e-9;
        at_most("monte_carlo_v" + std::to_string(j), mc.mean[j] - s.costs[j], tol);
      }
    }

    bool pass = true;
    json out;
    out["checks"] = json::array();
    for (const auto& c : checks) {
      pass = pass && c.pass;
      out["checks"].push_back(
          {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}});
    }
    out["pass"] = pass;
    {
      auto os = open_out(dir / "verify.json");
      os << out.dump(2) << '\n';
    }
    if (first_table) {
      auto os = open_out(dir / "value_table.csv");
      impulse::write_value_table_csv(os, *first_table);
    }
    for (const auto& c : checks) {
      if (!c.pass) {
        log << "FAIL " << c.name << ": " << fmt(c.value, 6) << " (tol " << fmt(c.tolerance, 6)
            << ")\n";
      }
    }
    log << (pass ? "all checks passed" : "verification failed") << '\n';
    return pass ? kExitOk : kExitVerify;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained impulse-control solver", "impulsectl"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string g_list;
  double tol = 0.0;
  double horizon = 10.0;
  std::uint64_t seed = CliOptions{}.seed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (default: output.dir)");
    sub->add_option("--tol", tol, "certificate tolerance override");
    sub->add_option("--seed", seed, "Monte Carlo seed");
  };
  auto* solve = app.add_subcommand("solve", "solve and certify, write report.json/report.txt");
  auto* traj = app.add_subcommand("trajectory", "write trajectory.csv of the optimal strategy");
  auto* scan = app.add_subcommand("dual-scan", "write dual_scan.csv with h(g)");
  auto* verify = app.add_subcommand("verify", "run every cross-check, write verify.json");
  for (auto* sub : {solve, traj, scan, verify}) common(sub);
  traj->add_option("--horizon", horizon, "time horizon");
  scan->add_option("--g-list", g_list, "comma-separated multipliers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CliOptions opts;
  opts.seed = seed;
  opts.horizon = horizon;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    const bool tol_given = app.get_subcommands().front()->count("--tol") > 0;
    if (tol_given) {
      if (!(tol > 0.0)) throw ConfigError("--tol must be positive");
      opts.tol = tol;
    }
    opts.g_list = parse_g_list(g_list);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (solve->parsed()) return cmd_solve(cfg, opts, err);
  if (traj->parsed()) return cmd_trajectory(cfg, opts, err);
  if (scan->parsed()) return cmd_dual_scan(cfg, opts, err);
  return cmd_verify(cfg, opts, err);
}

}  // namespace impulsectl
