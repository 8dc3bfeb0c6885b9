#include "vpatch/cli.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "vpatch/asymptotics.hpp"
#include "vpatch/field_io.hpp"

namespace vpatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string num(double v) { return fmt::format("{:.17g}", v); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json vec(Vec2 p) { return json::array({p.x, p.y}); }
Vec2 vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json ball(const Ball& b) { return {{"center", vec(b.center)}, {"radius", b.radius}}; }
Ball ball(const json& j) { return {vec(j.at("center")), j.at("radius").get<double>()}; }

// Collects named pass/fail checks for the report and the failure list.
struct Checks {
  json table = json::array();
  std::vector<Failure> failures;

  void add(const std::string& name, bool passed, const std::string& detail) {
    table.push_back({{"name", name}, {"passed", passed}, {"detail", detail}});
    if (!passed) failures.push_back({name, detail});
  }
};

VortexSpec vortex_for(const RunConfig& cfg) { return vortex_from(kr_search(cfg).minimum); }

json kr_min(const RunConfig& cfg, Checks& checks) {
  const KRSearch s = kr_search(cfg);
  const KRMinimum& m = s.minimum;
  std::string csv = "x1,y1,x2,y2,H\n";
  for (const auto& p : s.scan)
    csv += fmt::format("{},{},{},{},{}\n", num(p.x1.x), num(p.x1.y), num(p.x2.x), num(p.x2.y), num(p.value));
  write_text(fs::path(cfg.out_dir) / "scan.csv", csv);
  checks.add("strict_minimum", m.strictness_margin > 0.0, fmt::format("margin {:.3e}", m.strictness_margin));
  return {{"x1", vec(m.point.x1)},
          {"x2", vec(m.point.x2)},
          {"H", m.value},
          {"delta", m.delta},
          {"margin", m.strictness_margin},
          {"certificate_samples", m.certificate_samples},
          {"symmetry_reduced", m.symmetry_reduced},
          {"evaluations", s.evaluations}};
}

json solve(const RunConfig& cfg, Checks& checks) {
  const VortexSpec spec = vortex_for(cfg);
  const GridPtr grid = discretize(cfg.make_domain(), cfg.n);
  const GreenOperator green = build_green(grid);
  const SteadyPatch p = solve_steady({spec, cfg.lambda, cfg.max_iters, cfg.energy_tol, std::nullopt}, green);
  const fs::path out(cfg.out_dir);
  const double h = grid->h();

  save_patch(out, p, cfg);
  write_field_dump(out / "omega.vpf", p.omega);
  write_field_dump(out / "psi.vpf", p.psi.psi);
  write_pgm(out / "omega.pgm", p.omega);
  write_pgm(out / "psi.pgm", p.psi.psi);
  std::string csv = "iteration,energy\n";
  for (std::size_t k = 0; k < p.energy_ledger.size(); ++k) csv += fmt::format("{},{}\n", k, num(p.energy_ledger[k]));
  write_text(out / "energy.csv", csv);

  bool monotone = true;
  for (std::size_t k = 1; k < p.energy_ledger.size(); ++k)
    monotone = monotone && p.energy_ledger[k] >= p.energy_ledger[k - 1];
  const BoundaryGradient bg = boundary_gradient_check(p);
  const double residual = steadiness_residual(p);
  const EnergyBounds eb = energy_bounds_check(p, green);

  checks.add("energy_nondecreasing", monotone, fmt::format("{} iterates", p.energy_ledger.size()));
  checks.add("circulation", p.circulation_error() <= p.lambda * h * h,
             fmt::format("error {:.3e} vs lambda h^2 = {:.3e}", p.circulation_error(), p.lambda * h * h));
  checks.add("support_inside_balls",
             !touches_ball_boundary(*grid, p.cells1, spec.b1) && !touches_ball_boundary(*grid, p.cells2, spec.b2),
             "no support cell has a neighbour outside its ball");
  checks.add("mu_positive", p.mu1 > 0.0 && p.mu2 > 0.0, fmt::format("mu = ({:.6g}, {:.6g})", p.mu1, p.mu2));
  checks.add("boundary_gradient", bg.skipped || bg.min < 0.0,
             fmt::format("min {:.4g}, max {:.4g} over {} links", bg.min, bg.max, bg.links));
  checks.add("energy_above_test_function", eb.holds,
             fmt::format("E = {:.10g}, E(test function) = {:.10g}", eb.energy, eb.energy_testfn));

  return {{"E", p.energy},
          {"mu1", p.mu1},
          {"mu2", p.mu2},
          {"iterations", p.iterations},
          {"converged", p.converged},
          {"cycled", p.cycled},
          {"circulation_error", p.circulation_error()},
          {"residual", residual},
          {"min_boundary_gradient", bg.min},
          {"max_boundary_gradient", bg.max},
          {"degenerate_ties", p.tie_cells},
          {"energy_test_function", eb.energy_testfn},
          {"cells", {p.cells1.size(), p.cells2.size()}},
          {"h", h},
          {"b1", ball(spec.b1)},
          {"b2", ball(spec.b2)}};
}

json sweep(const RunConfig& cfg, Checks& checks) {
  SweepConfig sc;
  sc.domain = cfg.make_domain();
  sc.vortex = vortex_for(cfg);
  sc.n = cfg.n;
  sc.refine = cfg.refine;
  sc.min_cells = cfg.min_cells;
  sc.max_iters = cfg.max_iters;
  sc.energy_tol = cfg.energy_tol;
  const AsymptoticsReport r = sweep_lambda(sc, cfg.lambdas);

  std::string csv =
      "lambda,n,h,failed,under_resolved,cells1,cells2,iterations,eps1,eps2,diam1,diam2,dist1,dist2,mu1,mu2,"
      "energy,core,energy_test_function,mu_sum,mu_bound,iso1,iso2\n";
  json rows = json::array();
  for (const auto& w : r.rows) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(w.lambda), w.n,
                       num(w.h), int(w.failed), int(w.under_resolved), w.cells1, w.cells2, w.iterations, num(w.eps1),
                       num(w.eps2), num(w.diam1), num(w.diam2), num(w.dist1), num(w.dist2), num(w.mu1), num(w.mu2),
                       num(w.energy), num(w.core), num(w.energy_testfn), num(w.mu_sum), num(w.mu_bound),
                       num(w.iso1), num(w.iso2));
    if (w.failed) rows.push_back({{"lambda", w.lambda}, {"error", w.error}});
  }
  write_text(fs::path(cfg.out_dir) / "sweep.csv", csv);
  for (const auto& c : r.checks) checks.add(c.name, c.passed, c.detail);
  for (const auto& w : r.rows)
    if (w.under_resolved) checks.add("resolution", false, fmt::format("lambda {}: {} cells per patch", w.lambda,
                                                                         std::min(w.cells1, w.cells2)));
  return {{"energy_slope", r.energy_fit.slope},
          {"energy_slope_target", r.energy_slope_target},
          {"mu_slope", r.mu_fit.slope},
          {"mu_slope_target", r.mu_slope_target},
          {"diam_over_eps", {r.diam_ratio_min, r.diam_ratio_max}},
          {"core_ratio", r.core_ratio},
          {"failed_rows", rows}};
}

json evolve(const RunConfig& cfg, Checks& checks) {
  if (cfg.patch.empty()) config_error("evolution.patch is required (--patch)");
  const LoadedPatch lp = load_patch(cfg.patch);
  const Perturbation pert = parse_perturbation(cfg.perturb, lp.patch);
  const fs::path out(cfg.out_dir);

  ProbeOptions opts;
  opts.sample_every = cfg.sample_every;
  opts.cfl = cfg.cfl;
  opts.scheme = cfg.scheme == "direct" ? AdvectionScheme::Direct : AdvectionScheme::Mapped;
  const double turnover = turnover_time(lp.patch);
  int next_snapshot = 0;
  opts.on_sample = [&](const EvolutionState& s) {
    if (s.t / turnover + 1e-9 < next_snapshot * cfg.snapshot_every) return;
    write_pgm(out / fmt::format("snapshot_{:04d}.pgm", next_snapshot), s.omega);
    ++next_snapshot;
  };
  const ProbeResult r = stability_probe(lp.patch, pert, cfg.turnovers, lp.green, opts);

  std::string csv = "t,L1,E,mass,max_abs\n";
  for (const auto& s : r.samples)
    csv += fmt::format("{},{},{},{},{}\n", num(s.t), num(s.l1), num(s.energy), num(s.mass), num(s.max_abs));
  write_text(out / "series.csv", csv);

  checks.add("mass_conserved", r.mass_drift <= 1e-6 * std::ceil(cfg.turnovers),
             fmt::format("drift {:.3e}", r.mass_drift));
  checks.add("bounds_exact", r.bounds_exact, "min omega0 <= omega(t) <= max omega0");
  checks.add("energy_drift", r.energy_drift <= 0.02 * std::ceil(cfg.turnovers),
             fmt::format("max relative drift {:.3e}", r.energy_drift));
  return {{"turnover", turnover},
          {"turnover_definition", "4 pi |Omega_1| / |kappa_1|"},
          {"horizon_turnovers", cfg.turnovers},
          {"perturbation", cfg.perturb},
          {"perturbation_size", pert.magnitude()},
          {"initial_l1", r.initial},
          {"max_l1", r.max_l1},
          {"ratio", r.ratio},
          {"energy_drift", r.energy_drift},
          {"mass_drift", r.mass_drift},
          {"steps", r.steps},
          {"note", "finite-horizon evidence over the stated horizon, not a proof of stability"}};
}

json localmax(const RunConfig& cfg, Checks& checks) {
  if (cfg.patch.empty()) config_error("evolution.patch is required (--patch)");
  const LoadedPatch lp = load_patch(cfg.patch);
  const auto candidates = small_rearrangements(lp.patch, cfg.trials, cfg.seed);
  std::string csv = "trial,l1,applicable,e_candidate,e_bar,e_base,nu1,nu2,holds\n";
  int applicable = 0, held = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double l1 = l1_distance(candidates[k], lp.patch.omega);
    try {
      const LocalMaxResult r = local_max_test(lp.patch, candidates[k], lp.green);
      ++applicable;
      held += r.chain_holds();
      csv += fmt::format("{},{},1,{},{},{},{},{},{}\n", k, num(l1), num(r.e_candidate), num(r.e_bar),
                         num(r.e_base), num(r.nu1), num(r.nu2), int(r.chain_holds()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Inapplicable) throw;
      csv += fmt::format("{},{},0,,,,,,\n", k, num(l1));
    }
  }
  write_text(fs::path(cfg.out_dir) / "chain.csv", csv);
  checks.add("chain", held == applicable, fmt::format("{}/{} applicable candidates", held, applicable));
  return {{"trials", cfg.trials}, {"applicable", applicable}, {"held", held}, {"seed", cfg.seed}};
}

json green_report(const RunConfig& cfg, Checks& checks) {
  const bool rect = cfg.domain == "rectangle";
  const GreenCheck g = green_check(cfg.n, rect ? cfg.width : 1.0, rect ? cfg.height : 1.0);
  std::string csv = "n,max_error\n";
  for (std::size_t k = 0; k < g.rect_n.size(); ++k) csv += fmt::format("{},{}\n", g.rect_n[k], num(g.rect_err[k]));
  write_text(fs::path(cfg.out_dir) / "rectangle_convergence.csv", csv);
  checks.add("disk_analytic", g.disk_rel_linf <= 1e-2, fmt::format("relative max error {:.3e}", g.disk_rel_linf));
  double worst = g.orders.empty() ? 0.0 : g.orders.front();
  for (double o : g.orders) worst = std::min(worst, o);
  checks.add("rectangle_order", worst >= 1.8, fmt::format("smallest observed order {:.3f}", worst));
  return {{"disk_n", g.disk_n}, {"disk_rel_linf", g.disk_rel_linf}, {"rect_n", g.rect_n},
          {"rect_err", g.rect_err}, {"orders", g.orders}};
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "kr-min") return Command::KrMin;
  if (name == "solve") return Command::Solve;
  if (name == "sweep-lambda") return Command::SweepLambda;
  if (name == "evolve") return Command::Evolve;
  if (name == "localmax") return Command::LocalMax;
  if (name == "green-check") return Command::GreenCheck;
  config_error("unknown command " + name);
}

std::string command_name(Command c) {
  switch (c) {
    case Command::KrMin: return "kr-min";
    case Command::Solve: return "solve";
    case Command::SweepLambda: return "sweep-lambda";
    case Command::Evolve: return "evolve";
    case Command::LocalMax: return "localmax";
    case Command::GreenCheck: return "green-check";
  }
  return "?";
}

RunResult run(Command command, const RunConfig& cfg) {
  RunResult res;
  Checks checks;
  try {
    if (command != Command::GreenCheck && command != Command::Evolve && command != Command::LocalMax) {
      require_kappa1(cfg);
      require_kappa2(cfg);
    }
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create " + cfg.out_dir + ": " + ec.message());
    write_json(fs::path(cfg.out_dir) / "config.json", to_json(cfg));

    switch (command) {
      case Command::KrMin: res.report = kr_min(cfg, checks); break;
      case Command::Solve: res.report = solve(cfg, checks); break;
      case Command::SweepLambda: res.report = sweep(cfg, checks); break;
      case Command::Evolve: res.report = evolve(cfg, checks); break;
      case Command::LocalMax: res.report = localmax(cfg, checks); break;
      case Command::GreenCheck: res.report = green_report(cfg, checks); break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) {
      res.exit_code = 1;
      res.failures = {{"ConfigError", e.what()}};
      return res;
    }
    checks.add(std::string(error_name(e.code())), false, e.what());
  }
  res.failures = checks.failures;
  res.exit_code = res.failures.empty() ? 0 : 2;
  res.report["command"] = command_name(command);
  res.report["checks"] = checks.table;
  json fl = json::array();
  for (const auto& f : res.failures) fl.push_back({{"check", f.check}, {"detail", f.detail}});
  res.report["failures"] = fl;
  res.report["passed"] = res.exit_code == 0;
  write_json(fs::path(cfg.out_dir) / "report.json", res.report);
  return res;
}

GreenCheck green_check(int n, double width, double height) {
  GreenCheck out;
  out.disk_n = n;
  {
    const GridPtr g = discretize(Domain::unit_disk(), n);
    // Compactly supported C^2 bumps of both signs.
    auto bump = [](Vec2 p, Vec2 c, double r) {
      const double s = 1.0 - dot(p - c, p - c) / (r * r);
      return s > 0.0 ? s * s * s : 0.0;
    };
    const ScalarField omega =
        sample(g, [&](Vec2 p) { return bump(p, {0.3, 0.1}, 0.35) - 2.0 * bump(p, {-0.35, -0.2}, 0.25); });
    const ScalarField a = build_green(g).apply(omega);
    const ScalarField b = build_green(g, GreenBackend::AnalyticDiskQuadrature).apply(omega);
    out.disk_rel_linf = (a - b).max_abs() / b.max_abs();
  }
  const double kx = kPi / width, ky = kPi / height;
  auto u = [&](Vec2 p) {
    return std::sin(kx * p.x) * std::sin(ky * p.y) + 0.5 * std::sin(3 * kx * p.x) * std::sin(2 * ky * p.y);
  };
  auto f = [&](Vec2 p) {
    return (kx * kx + ky * ky) * std::sin(kx * p.x) * std::sin(ky * p.y) +
           0.5 * (9 * kx * kx + 4 * ky * ky) * std::sin(3 * kx * p.x) * std::sin(2 * ky * p.y);
  };
  for (int m : {std::max(16, n / 4), std::max(32, n / 2), std::max(64, n)}) {
    const GridPtr g = discretize(Domain::rectangle(width, height), m);
    const ScalarField psi = build_green(g).apply(sample(g, f));
    out.rect_n.push_back(m);
    out.rect_err.push_back((psi - sample(g, u)).max_abs());
  }
  for (std::size_t k = 1; k < out.rect_err.size(); ++k)
    out.orders.push_back(std::log2(out.rect_err[k - 1] / out.rect_err[k]));
  return out;
}

KRSearch kr_search(const RunConfig& cfg) {
  const Domain d = cfg.make_domain();
  KRPoint seed;
  seed.kappa1 = require_kappa1(cfg);
  seed.kappa2 = require_kappa2(cfg);
  if (d.is_disk()) {
    seed.x1 = {0.3, 0.0};
    seed.x2 = {-0.3, 0.0};
  } else {
    seed.x1 = {0.25 * cfg.width, 0.5 * cfg.height};
    seed.x2 = {0.75 * cfg.width, 0.5 * cfg.height};
  }
  if (cfg.x1) seed.x1 = *cfg.x1;
  if (cfg.x2) seed.x2 = *cfg.x2;
  const PointGreen g =
      d.is_disk() ? PointGreen::disk() : PointGreen::from_grid(build_green(discretize(d, cfg.n)));
  return search_local_min(seed, default_search_box(seed, d), g);
}

void save_patch(const fs::path& dir, const SteadyPatch& p, const RunConfig& cfg) {
  fs::create_directories(dir);
  const json j{{"domain", {{"kind", cfg.domain}, {"width", cfg.width}, {"height", cfg.height}}},
               {"n", cfg.n},
               {"lambda", p.lambda},
               {"kappa1", p.vortex.kappa1},
               {"kappa2", p.vortex.kappa2},
               {"b1", ball(p.vortex.b1)},
               {"b2", ball(p.vortex.b2)},
               {"energy", p.energy}};
  write_json(dir / "patch.json", j);
  write_field_dump(dir / "omega1.vpf", p.omega1);
  write_field_dump(dir / "omega2.vpf", p.omega2);
}

LoadedPatch load_patch(const fs::path& dir) {
  std::ifstream is(dir / "patch.json");
  if (!is) config_error("no patch.json in " + dir.string());
  LoadedPatch lp;
  VortexSpec spec;
  try {
    const json j = json::parse(is);
    lp.cfg.domain = j.at("domain").at("kind").get<std::string>();
    lp.cfg.width = j.at("domain").at("width").get<double>();
    lp.cfg.height = j.at("domain").at("height").get<double>();
    lp.cfg.n = j.at("n").get<int>();
    lp.cfg.lambda = j.at("lambda").get<double>();
    spec.kappa1 = j.at("kappa1").get<double>();
    spec.kappa2 = j.at("kappa2").get<double>();
    spec.b1 = ball(j.at("b1"));
    spec.b2 = ball(j.at("b2"));
  } catch (const json::exception& e) {
    config_error(fmt::format("{}: {}", (dir / "patch.json").string(), e.what()));
  }
  lp.cfg.kappa1 = spec.kappa1;
  lp.cfg.kappa2 = spec.kappa2;
  lp.grid = discretize(lp.cfg.make_domain(), lp.cfg.n);
  lp.green = build_green(lp.grid);
  lp.patch = patch_from_fields(spec, lp.cfg.lambda, load_field(dir / "omega1.vpf", lp.grid),
                               load_field(dir / "omega2.vpf", lp.grid), lp.green);
  return lp;
}

Perturbation parse_perturbation(const std::string& text, const SteadyPatch& base) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      config_error("evolution.perturb: bad number '" + s + "' in '" + text + "'");
    }
  };
  if (kind == "none" && arg.empty()) return Perturbation::none();
  if (kind == "translate" && !arg.empty()) {
    const double h = base.omega.grid().h();
    const auto comma = arg.find(',');
    const std::string sx = arg.substr(0, comma);
    Vec2 d{sx == "cell" ? h : number(sx), 0.0};
    if (comma != std::string::npos) d.y = number(arg.substr(comma + 1));
    return Perturbation::translate(1, d);
  }
  if (kind == "rotate" && !arg.empty()) return Perturbation::rotate(number(arg));
  if (kind == "flow" && !arg.empty()) {
    const BumpTest xi{base.vortex.b1.center, base.vortex.b1.radius, BumpShape::Tensor};
    return Perturbation::flow(xi, number(arg));
  }
  config_error("evolution.perturb: expected none, translate:<dx>[,<dy>], rotate:<angle> or flow:<time>, got '" +
               text + "'");
}

}  // namespace vpatch
