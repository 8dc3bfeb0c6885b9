#pragma once

// Run configuration: INI-style sections ([domain], [vortex], [solver],
// [evolution], [run]) with key = value lines, or the equivalent JSON object
// of objects. Unknown sections or keys and duplicate keys are errors.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vpatch/domain.hpp"

namespace vpatch {

struct RunConfig {
  // [domain]
  std::string domain = "disk";  // disk | rectangle
  double width = 1.0, height = 1.0;

  // [vortex]
  std::optional<double> kappa1, kappa2;
  std::optional<Vec2> x1, x2;  // seeds for the point-vortex search

  // [solver]
  double lambda = 200.0;
  std::vector<double> lambdas{100, 200, 400, 800};
  int n = 256;
  int max_iters = 500;
  double energy_tol = 1e-10;
  bool refine = true;  // sweep: n grows like sqrt(lambda), n at lambda = 200
  int min_cells = 30;

  // [evolution]
  std::string patch;  // directory written by `solve`
  std::string perturb = "translate:cell";
  double turnovers = 3.0;
  double sample_every = 0.05;
  double snapshot_every = 0.5;
  double cfl = 0.4;
  std::string scheme = "mapped";  // mapped | direct
  int trials = 64;

  // [run]
  std::string out_dir = "out";
  std::uint64_t seed = 12345;
  int threads = 1;

  bool operator==(const RunConfig&) const = default;

  Domain make_domain() const;
};

/// section -> key -> raw text, the common form of both file syntaxes.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// Parses JSON (a leading '{' or any valid JSON text) or else INI. Throws ConfigError.
RawConfig parse_raw(const std::string& text);

/// Sets section.key, replacing any earlier value (used for command-line overrides).
void set_raw(RawConfig& raw, const std::string& dotted_key, const std::string& value);

/// Typed validation of every entry. Throws ConfigError naming the field.
RunConfig resolve(const RawConfig& raw);

inline RunConfig parse_config(const std::string& text) { return resolve(parse_raw(text)); }

/// Throws ConfigError naming the missing field and its flag.
double require_kappa1(const RunConfig& cfg);
double require_kappa2(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace vpatch
