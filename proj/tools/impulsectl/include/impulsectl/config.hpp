#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "impulse/bellman_grid.hpp"
#include "impulse/dual.hpp"
#include "impulse/inventory.hpp"
#include "impulse/model.hpp"

namespace impulsectl {

/// Malformed or inconsistent configuration. The message starts with
/// "<source>:<line>:" when the offending node is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One cost rate and lump of the generic model: every listed term is summed.
struct CostTerm {
  double constant = 0.0;  // gradual: c
  double linear = 0.0;    // gradual: c * x
  double at_lower = 0.0;  // gradual: c while x sits at the lower end of the state interval
  double fixed = 0.0;     // lump: c per impulse
  double per_unit = 0.0;  // lump: c * a
};

struct GenericModelConfig {
  impulse::Interval states{0.0, 10.0};
  impulse::Interval actions{0.0, 10.0};
  double discount = 1.0;
  std::string flow = "linear_decay";  // or exponential_decay
  double flow_rate = 1.0;
  std::string jump = "add_clamp";
  std::vector<CostTerm> costs;
};

enum class ModelKind { inventory, generic };

struct SolveConfig {
  double d = 0.0;
  impulse::EngineKind engine = impulse::EngineKind::closed_form;
  double search_tol = 1e-10;
  std::optional<double> cert_tol;
  std::size_t mc_paths = 0;
};

struct GridConfig {
  impulse::GridSpec spec;
  double tol = 1e-9;
  std::size_t max_iter = 10000;
};

/// A fixed cyclic strategy to evaluate next to the optimum.
struct PolicyConfig {
  impulse::Theta tau = impulse::Theta::after(0.0);
  double order = 0.0;
};

struct VerifyConfig {
  double grid_tol = 5e-3;
  double window_hi = 3.0;
  std::vector<double> g_values{0.3, 1.0};
  std::size_t mc_paths = 2000;
};

struct RunConfig {
  std::string source = "<config>";
  ModelKind kind = ModelKind::inventory;
  impulse::inventory::InventoryParams inventory;  // holding_limit mirrors solve.d
  GenericModelConfig generic;
  SolveConfig solve;
  GridConfig grid;
  std::optional<PolicyConfig> policy;
  VerifyConfig verify;
  std::filesystem::path output_dir = ".";

  impulse::ImpulseModel build_model() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace impulsectl
