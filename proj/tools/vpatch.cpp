// vpatch: command-line front end. Flags override the config file; every
// run writes report.json and the resolved config.json into --out-dir.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vpatch/cli.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const Flag kCommon[] = {
    {"--out-dir", "run.out_dir", "output directory"},
    {"--seed", "run.seed", "64-bit seed for perturbation sampling"},
    {"--threads", "run.threads", "thread count (1)"},
    {"--domain", "domain.kind", "disk or rectangle"},
    {"--width", "domain.width", "rectangle width"},
    {"--height", "domain.height", "rectangle height"},
    {"--n", "solver.n", "cells along the longer side"},
};
const Flag kVortex[] = {
    {"--kappa1", "vortex.kappa1", "circulation of the positive patch"},
    {"--kappa2", "vortex.kappa2", "circulation of the negative patch"},
    {"--x1", "vortex.x1", "search seed for the positive vortex, 'x,y'"},
    {"--x2", "vortex.x2", "search seed for the negative vortex, 'x,y'"},
};
const Flag kSolve[] = {
    {"--lambda", "solver.lambda", "patch vorticity"},
    {"--max-iters", "solver.max_iters", "iteration cap"},
    {"--energy-tol", "solver.energy_tol", "relative energy stall"},
};
const Flag kSweep[] = {
    {"--lambdas", "solver.lambdas", "comma-separated lambda list"},
    {"--refine", "solver.refine", "scale n with sqrt(lambda) (true/false)"},
    {"--min-cells", "solver.min_cells", "resolution floor per patch"},
    {"--max-iters", "solver.max_iters", "iteration cap"},
    {"--energy-tol", "solver.energy_tol", "relative energy stall"},
};
const Flag kEvolve[] = {
    {"--patch", "evolution.patch", "directory written by solve"},
    {"--perturb", "evolution.perturb", "none | translate:dx[,dy] | rotate:angle | flow:time"},
    {"--turnovers", "evolution.turnovers", "horizon in turnovers"},
    {"--sample-every", "evolution.sample_every", "sampling interval in turnovers"},
    {"--snapshot-every", "evolution.snapshot_every", "PGM snapshot interval in turnovers"},
    {"--cfl", "evolution.cfl", "dt |v| / h"},
    {"--scheme", "evolution.scheme", "mapped or direct"},
};
const Flag kLocalMax[] = {
    {"--patch", "evolution.patch", "directory written by solve"},
    {"--trials", "evolution.trials", "number of seeded rearrangements"},
};

struct Bound {
  std::string key;
  std::string value;
  CLI::Option* opt;
};

// `out` is reserved up front: CLI11 keeps pointers to the bound strings.
template <std::size_t N>
void bind(CLI::App* sub, const Flag (&flags)[N], std::vector<Bound>& out) {
  for (const Flag& f : flags) {
    Bound& b = out.emplace_back(Bound{f.key, "", nullptr});
    b.opt = sub->add_option(f.name, b.value, f.help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady opposite-signed vortex patch pairs: construction, sweeps and stability probes"};
  app.require_subcommand(1);
  std::string config_path;

  struct Sub {
    CLI::App* app;
    vpatch::Command command;
    std::vector<Bound> flags;
  };
  std::vector<Sub> subs;
  subs.reserve(6);
  auto make = [&](const char* name, const char* help, vpatch::Command c) -> Sub& {
    subs.push_back({app.add_subcommand(name, help), c, {}});
    Sub& s = subs.back();
    s.flags.reserve(24);
    s.app->add_option("--config", config_path, "INI or JSON config file");
    bind(s.app, kCommon, s.flags);
    return s;
  };

  Sub& kr = make("kr-min", "certified local minimum of the point-vortex energy", vpatch::Command::KrMin);
  bind(kr.app, kVortex, kr.flags);
  Sub& solve = make("solve", "maximise the energy over the patch class", vpatch::Command::Solve);
  bind(solve.app, kVortex, solve.flags);
  bind(solve.app, kSolve, solve.flags);
  Sub& sweep = make("sweep-lambda", "solve across lambda and fit the asymptotics", vpatch::Command::SweepLambda);
  bind(sweep.app, kVortex, sweep.flags);
  bind(sweep.app, kSweep, sweep.flags);
  Sub& evolve = make("evolve", "Euler evolution of a perturbed patch", vpatch::Command::Evolve);
  bind(evolve.app, kEvolve, evolve.flags);
  Sub& lm = make("localmax", "level-set comparison chain over small rearrangements", vpatch::Command::LocalMax);
  bind(lm.app, kLocalMax, lm.flags);
  make("green-check", "validate the Green operator against exact references", vpatch::Command::GreenCheck);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const Sub* chosen = nullptr;
  for (const auto& s : subs)
    if (s.app->parsed()) chosen = &s;

  vpatch::RunConfig cfg;
  try {
    vpatch::RawConfig raw;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw vpatch::Error(vpatch::ErrorCode::ConfigError, "cannot read " + config_path);
      std::stringstream ss;
      ss << is.rdbuf();
      raw = vpatch::parse_raw(ss.str());
    }
    for (const auto& b : chosen->flags)
      if (b.opt->count() > 0) vpatch::set_raw(raw, b.key, b.value);
    cfg = vpatch::resolve(raw);
  } catch (const vpatch::Error& e) {
    std::cerr << nlohmann::json{{"failures", {{{"check", "ConfigError"}, {"detail", e.what()}}}}}.dump() << "\n";
    return 1;
  }

  const vpatch::RunResult r = vpatch::run(chosen->command, cfg);
  if (r.exit_code != 0) {
    nlohmann::json fl = nlohmann::json::array();
    for (const auto& f : r.failures) fl.push_back({{"check", f.check}, {"detail", f.detail}});
    std::cerr << nlohmann::json{{"failures", fl}}.dump() << "\n";
  } else {
    std::cout << "ok: " << cfg.out_dir << "/report.json\n";
  }
  return r.exit_code;
}
