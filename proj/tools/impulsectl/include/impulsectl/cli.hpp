#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "impulsectl/config.hpp"

namespace impulsectl {

/// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitVerify = 2;

struct CliOptions {
  std::filesystem::path out_dir;  // empty: output.dir from the config
  std::optional<double> tol;      // overrides solve.cert_tol
  std::uint64_t seed = 20240101;
  double horizon = 10.0;
  std::vector<double> g_list;
};

/// report.json, report.txt, measure.csv. 0 when the certificate holds, 2 otherwise.
int cmd_solve(const RunConfig& cfg, const CliOptions& opts, std::ostream& log);
/// trajectory.csv for the optimal strategy.
int cmd_trajectory(const RunConfig& cfg, const CliOptions& opts, std::ostream& log);
/// dual_scan.csv with h(g) for every g in opts.g_list.
int cmd_dual_scan(const RunConfig& cfg, const CliOptions& opts, std::ostream& log);
/// verify.json and value_table.csv. 0 when every cross-check passes, 2 otherwise.
int cmd_verify(const RunConfig& cfg, const CliOptions& opts, std::ostream& log);

/// "0.1,0.2, 0.3" -> {0.1, 0.2, 0.3}; empty string -> {}. Throws ConfigError.
std::vector<double> parse_g_list(const std::string& text);

/// Full command line: impulsectl <solve|trajectory|dual-scan|verify> --config PATH ...
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace impulsectl
