#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "impulsectl/cli.hpp"
#include "impulsectl/config.hpp"

namespace fs = std::filesystem;
using namespace impulsectl;

namespace {

const char* kP0 = R"(model:
  kind: inventory
  demand: 1
  setup_cost: 0.5
  holding_cost: 1
  discount: 1
  capacity: 10
solve:
  d: 0.5
)";

std::string with(const std::string& base, const std::string& from, const std::string& to) {
  std::string s = base;
  const auto pos = s.find(from);
  if (pos == std::string::npos) throw std::runtime_error("pattern not found: " + from);
  s.replace(pos, from.size(), to);
  return s;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "impulse_cli_tests" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  CliOptions opts(const std::string& sub = "out") const {
    CliOptions o;
    o.out_dir = dir_ / sub;
    return o;
  }

  std::string read(const std::string& rel) const {
    std::ifstream in(dir_ / rel, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json json_of(const std::string& rel) const { return nlohmann::json::parse(read(rel)); }

  fs::path write_config(const std::string& text) const {
    const auto p = dir_ / "config.yaml";
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
  std::ostringstream log_;
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Config, DefaultsAndInventoryFields) {
  const auto c = parse_config(kP0, "p0.yaml");
  EXPECT_EQ(c.kind, ModelKind::inventory);
  EXPECT_EQ(c.solve.d, 0.5);
  EXPECT_EQ(c.inventory.holding_limit, 0.5);
  EXPECT_EQ(c.solve.engine, impulse::EngineKind::closed_form);
  EXPECT_EQ(c.grid.spec.n_states, 401u);
  EXPECT_FALSE(c.policy.has_value());
  EXPECT_EQ(c.verify.grid_tol, 5e-3);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    parse_config(with(kP0, "  capacity: 10\n", "  capacity: 10\n  colour: red\n"), "p0.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("p0.yaml:8:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("model.colour"), std::string::npos);
  }
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config(with(kP0, "demand: 1", "demand: -1")), ConfigError);
  EXPECT_THROW(parse_config(with(kP0, "demand: 1", "demand: lots")), ConfigError);
  EXPECT_THROW(parse_config(with(kP0, "d: 0.5", "d: -0.5")), ConfigError);
  EXPECT_THROW(parse_config(std::string(kP0) + "  engine: magic\n"), ConfigError);
  EXPECT_THROW(parse_config(std::string(kP0) + "grid:\n  n_states: 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("model: [1, 2\n"), ConfigError);
}

TEST(Config, CapacityCheckedAtParseTime) {
  try {
    parse_config(with(kP0, "capacity: 10", "capacity: 1"), "c.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("c.yaml:7:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("1.2564"), std::string::npos) << e.what();
  }
}

TEST(Config, PolicyAcceptsInf) {
  const auto c = parse_config(std::string(kP0) + "policy:\n  tau: inf\n");
  ASSERT_TRUE(c.policy.has_value());
  EXPECT_TRUE(c.policy->tau.is_never());
  const auto d = parse_config(std::string(kP0) + "policy:\n  tau: 0.25\n  order: 1.5\n");
  EXPECT_EQ(d.policy->tau.value(), 0.25);
  EXPECT_EQ(d.policy->order, 1.5);
}

TEST(Config, GenericModel) {
  const char* text = R"(model:
  kind: generic
  states: [0, 10]
  actions: [0, 10]
  discount: 1
  flow: {kind: linear_decay, rate: 1}
  jump: add_clamp
  costs:
    - gradual: {at_lower: 1}
      lump: {fixed: 0.5}
    - gradual: {linear: 1}
solve:
  d: 1.0
)";
  const auto c = parse_config(text);
  EXPECT_EQ(c.kind, ModelKind::generic);
  EXPECT_EQ(c.solve.engine, impulse::EngineKind::grid);
  const auto m = c.build_model();
  EXPECT_EQ(m.num_constraints(), 1u);
  EXPECT_EQ(m.flow(3.0, 1.0), 2.0);
  EXPECT_EQ(m.flow(0.5, 1.0), 0.0);
  EXPECT_EQ(m.gradual_costs[0](0.0), 1.0);
  EXPECT_EQ(m.gradual_costs[0](0.5), 0.0);
  EXPECT_EQ(m.gradual_costs[1](2.0), 2.0);
  EXPECT_EQ(m.lump_costs[0](0.0, 3.0), 0.5);
  EXPECT_EQ(m.kink_times(2.0), std::vector<double>{2.0});

  EXPECT_THROW(parse_config(std::string(text) + "  engine: closed_form\n"), ConfigError);
  EXPECT_THROW(parse_config(with(text, "linear_decay", "teleport")), ConfigError);
}

TEST(GList, Parsing) {
  EXPECT_TRUE(parse_g_list("").empty());
  EXPECT_EQ(parse_g_list("0.1, 0.2,1"), (std::vector<double>{0.1, 0.2, 1.0}));
  EXPECT_THROW(parse_g_list("0.1,,0.2"), ConfigError);
  EXPECT_THROW(parse_g_list("0.1,x"), ConfigError);
  EXPECT_THROW(parse_g_list("-1"), ConfigError);
}

TEST_F(CliTest, SolveDelayedRegime) {
  EXPECT_EQ(cmd_solve(parse_config(kP0), opts(), log_), kExitOk) << log_.str();
  const auto r = json_of("out/report.json");
  EXPECT_EQ(r["regime"], "delayed_order");
  EXPECT_NEAR(r["v1"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r["rollout"]["v1"].get<double>(), 0.5, 1e-8);
  EXPECT_NEAR(r["g_star"].get<double>(), 0.397952547315917, 1e-12);
  EXPECT_EQ(r["status"], "certified");
  EXPECT_TRUE(r["certificate"]["pass"].get<bool>());
  EXPECT_NE(read("out/report.txt").find("delayed_order"), std::string::npos);
  const auto rows = csv_rows(read("out/measure.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "theta", "a", "weight"}));
}

TEST_F(CliTest, SolveNeverOrder) {
  const auto cfg = parse_config(with(kP0, "setup_cost: 0.5", "setup_cost: 2"));
  EXPECT_EQ(cmd_solve(cfg, opts(), log_), kExitOk) << log_.str();
  EXPECT_EQ(json_of("out/report.json")["regime"], "never_order");
}

TEST_F(CliTest, SolveWithPolicyAndMonteCarlo) {
  const auto cfg =
      parse_config(std::string(kP0) + "  mc_paths: 4000\npolicy:\n  tau: 0.1\n  order: 2\n");
  EXPECT_EQ(cmd_solve(cfg, opts(), log_), kExitOk) << log_.str();
  const auto r = json_of("out/report.json");
  const double mc = r["monte_carlo"]["mean"][1].get<double>();
  const double se = r["monte_carlo"]["std_error"][1].get<double>();
  EXPECT_NEAR(mc, 0.5, 5.0 * se);
  // The fixed policy holds more than d: infeasible, and its Lagrangian bounds h(g*) from above.
  EXPECT_FALSE(r["policy"]["feasible"].get<bool>());
  EXPECT_GE(r["policy"]["lagrangian_at_g_star"].get<double>(),
            r["certificate"]["h_star"].get<double>() - 1e-9);
}

TEST_F(CliTest, TrajectorySpacing) {
  CliOptions o = opts();
  o.horizon = 5.0;
  EXPECT_EQ(cmd_trajectory(parse_config(kP0), o, log_), kExitOk) << log_.str();
  const auto rows = csv_rows(read("out/trajectory.csv"));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "kind", "x_before", "x_after", "order"}));
  std::vector<double> times;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][1] == "impulse") times.push_back(std::stod(rows[i][0]));
  }
  ASSERT_GE(times.size(), 3u);
  for (std::size_t i = 1; i < times.size(); ++i) {
    EXPECT_NEAR(times[i] - times[i - 1], 1.25643120862617 + 0.312521134104444, 1e-12);
  }
}

TEST_F(CliTest, TrajectoryShortHorizonAndNeverOrder) {
  CliOptions o = opts("a");
  o.horizon = 0.1;
  EXPECT_EQ(cmd_trajectory(parse_config(kP0), o, log_), kExitOk);
  EXPECT_EQ(csv_rows(read("a/trajectory.csv")).size(), 2u);
  CliOptions n = opts("b");
  n.horizon = 5.0;
  EXPECT_EQ(cmd_trajectory(parse_config(with(kP0, "setup_cost: 0.5", "setup_cost: 2")), n, log_),
            kExitOk);
  EXPECT_EQ(read("b/trajectory.csv"), "t,kind,x_before,x_after,order\n0,wait-start,0,0,0\n");
}

TEST_F(CliTest, DualScan) {
  CliOptions o = opts();
  for (int i = 1; i <= 10; ++i) o.g_list.push_back(0.1 * i);
  EXPECT_EQ(cmd_dual_scan(parse_config(kP0), o, log_), kExitOk) << log_.str();
  const auto rows = csv_rows(read("out/dual_scan.csv"));
  ASSERT_EQ(rows.size(), 11u);
  std::vector<double> h;
  for (std::size_t i = 1; i < rows.size(); ++i) h.push_back(std::stod(rows[i][1]));
  for (std::size_t i = 1; i + 1 < h.size(); ++i) EXPECT_GE(h[i], 0.5 * (h[i - 1] + h[i + 1]) - 1e-12);
  const auto peak = std::max_element(h.begin(), h.end()) - h.begin();
  EXPECT_NEAR(0.1 * (peak + 1), 0.4, 1e-12);
}

TEST_F(CliTest, DualScanEdgeCases) {
  CliOptions o = opts("k2");
  o.g_list = {0.0};
  EXPECT_EQ(cmd_dual_scan(parse_config(with(kP0, "setup_cost: 0.5", "setup_cost: 2")), o, log_),
            kExitOk);
  EXPECT_EQ(read("k2/dual_scan.csv"), "g,h\n0,1\n");
  EXPECT_EQ(cmd_dual_scan(parse_config(kP0), opts("empty"), log_), kExitOk);
  EXPECT_EQ(read("empty/dual_scan.csv"), "g,h\n");
}

TEST_F(CliTest, VerifyPasses) {
  EXPECT_EQ(cmd_verify(parse_config(kP0), opts(), log_), kExitOk) << log_.str();
  const auto v = json_of("out/verify.json");
  EXPECT_TRUE(v["pass"].get<bool>());
  EXPECT_GE(v["checks"].size(), 8u);
  EXPECT_EQ(read("out/value_table.csv").substr(0, 4), "x,W\n");
}

TEST_F(CliTest, VerifyCoarseGridFails) {
  const auto cfg = parse_config(std::string(kP0) + "grid:\n  n_states: 11\n");
  EXPECT_EQ(cmd_verify(cfg, opts(), log_), kExitVerify);
  EXPECT_FALSE(json_of("out/verify.json")["pass"].get<bool>());
  EXPECT_NE(log_.str().find("grid_vs_closed_form"), std::string::npos);
}

TEST_F(CliTest, VerifyNeverOrder) {
  const auto cfg = parse_config(with(kP0, "setup_cost: 0.5", "setup_cost: 2"));
  EXPECT_EQ(cmd_verify(cfg, opts(), log_), kExitOk) << log_.str();
}

TEST_F(CliTest, Deterministic) {
  const auto cfg = parse_config(std::string(kP0) + "  mc_paths: 500\nverify:\n  mc_paths: 500\n");
  for (const char* sub : {"r1", "r2"}) {
    CliOptions o = opts(sub);
    o.seed = 99;
    ASSERT_EQ(cmd_solve(cfg, o, log_), kExitOk);
    ASSERT_EQ(cmd_verify(cfg, o, log_), kExitOk);
  }
  for (const char* f : {"report.json", "report.txt", "measure.csv", "verify.json",
                        "value_table.csv"}) {
    EXPECT_EQ(read(std::string("r1/") + f), read(std::string("r2/") + f)) << f;
  }
}

TEST_F(CliTest, RunCliExitCodes) {
  const auto cfg = write_config(kP0);
  const std::string out = (dir_ / "cli").string();
  const std::string cfg_s = cfg.string();
  std::ostringstream so, se;
  {
    const char* argv[] = {"impulsectl", "solve", "--config", cfg_s.c_str(), "--out", out.c_str()};
    EXPECT_EQ(run_cli(6, argv, so, se), kExitOk) << se.str();
  }
  {
    const char* argv[] = {"impulsectl", "dual-scan", "--config", cfg_s.c_str(),
                          "--out",      out.c_str(), "--g-list", "0.2,0.4"};
    EXPECT_EQ(run_cli(8, argv, so, se), kExitOk) << se.str();
    EXPECT_EQ(csv_rows(read("cli/dual_scan.csv")).size(), 3u);
  }
  {
    const char* argv[] = {"impulsectl", "solve", "--config", cfg_s.c_str(), "--out",
                          out.c_str(),  "--tol", "1e-30"};
    EXPECT_EQ(run_cli(8, argv, so, se), kExitVerify);
  }
  {
    const char* argv[] = {"impulsectl", "solve"};
    EXPECT_EQ(run_cli(2, argv, so, se), kExitConfig);
  }
  {
    const char* argv[] = {"impulsectl", "frobnicate", "--config", cfg_s.c_str()};
    EXPECT_EQ(run_cli(4, argv, so, se), kExitConfig);
  }
  {
    const char* argv[] = {"impulsectl", "verify", "--config", "/nonexistent/x.yaml"};
    EXPECT_EQ(run_cli(4, argv, so, se), kExitConfig);
  }
}
