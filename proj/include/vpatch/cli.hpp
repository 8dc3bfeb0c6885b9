#pragma once

// Command pipelines behind the vpatch executable. Each command writes its
// artifacts (report.json, CSV tables, field dumps, PGM previews and the
// resolved config.json) into cfg.out_dir.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpatch/config.hpp"
#include "vpatch/evolution.hpp"

namespace vpatch {

enum class Command { KrMin, Solve, SweepLambda, Evolve, LocalMax, GreenCheck };

/// Throws ConfigError for unknown names.
Command parse_command(const std::string& name);
std::string command_name(Command c);

struct Failure {
  std::string check;
  std::string detail;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 configuration error, 2 invariant failure
  std::vector<Failure> failures;
  nlohmann::json report;
};

/// Never throws for library errors: configuration problems give exit 1,
/// everything else raised during compute is an invariant failure (exit 2).
RunResult run(Command command, const RunConfig& cfg);

struct GreenCheck {
  int disk_n = 0;
  double disk_rel_linf = 0.0;  // masked solve vs analytic quadrature
  std::vector<int> rect_n;
  std::vector<double> rect_err;  // max error against the manufactured solution
  std::vector<double> orders;
};

/// Disk comparison at n; rectangle (width x height) manufactured solution at
/// n/4, n/2 and n.
GreenCheck green_check(int n, double width = 1.0, double height = 1.0);

/// Seeds from the config (mirror pair by default), then the certified search.
KRSearch kr_search(const RunConfig& cfg);

/// patch.json plus omega1.vpf and omega2.vpf.
void save_patch(const std::filesystem::path& dir, const SteadyPatch& patch, const RunConfig& cfg);

struct LoadedPatch {
  RunConfig cfg;  // domain, n and lambda of the run that produced the patch
  GridPtr grid;
  GreenOperator green;
  SteadyPatch patch;
};

LoadedPatch load_patch(const std::filesystem::path& dir);

/// "none", "translate:<dx>[,<dy>]" (dx may be "cell"), "rotate:<angle>" or
/// "flow:<time>". Throws ConfigError.
Perturbation parse_perturbation(const std::string& text, const SteadyPatch& base);

}  // namespace vpatch
