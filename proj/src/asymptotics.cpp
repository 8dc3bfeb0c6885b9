#include "vpatch/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace vpatch {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;
}

double epsilon_scale(double kappa, double lambda) {
  if (!(lambda > 0.0) || kappa == 0.0) throw Error(ErrorCode::InvalidArgument, "need lambda > 0 and kappa != 0");
  return std::sqrt(std::abs(kappa) / (lambda * kPi));
}

Vec2 centroid(const ScalarField& omega_i, double kappa, double lambda) {
  const Grid& g = omega_i.grid();
  const double mass = integrate(omega_i);
  if (std::abs(mass - kappa) > lambda * g.cell_area() * (1.0 + 1e-9))
    throw Error(ErrorCode::CirculationMismatch,
                fmt::format("component carries {:.6g}, expected {:.6g}", mass, kappa));
  Vec2 m;
  for (int k : g.inside_cells()) m += omega_i[k] * g.center(k);
  return (g.cell_area() / kappa) * m;
}

double core_energy(const SteadyPatch& patch) {
  const Grid& g = patch.omega.grid();
  double t = 0.0;
  for (int k : g.inside_cells()) {
    t += (patch.psi.psi[k] - patch.mu1) * patch.omega1[k];
    t += (patch.psi.psi[k] + patch.mu2) * patch.omega2[k];
  }
  return 0.5 * t * g.cell_area();
}

EnergyBounds energy_bounds_check(const SteadyPatch& patch, const GreenOperator& green) {
  const VortexSpec& v = patch.vortex;
  EnergyBounds out;
  out.energy = patch.energy;
  out.energy_testfn = energy(green, test_function(green.grid_ptr(), v, patch.lambda, true));
  out.holds = out.energy >= out.energy_testfn;
  out.mu_sum = std::abs(v.kappa1) * patch.mu1 + std::abs(v.kappa2) * patch.mu2;
  out.mu_bound = -(v.kappa1 * v.kappa1 * std::log(epsilon_scale(v.kappa1, patch.lambda)) +
                   v.kappa2 * v.kappa2 * std::log(epsilon_scale(v.kappa2, patch.lambda))) /
                 (2.0 * kPi);
  return out;
}

double isoperimetric_ratio(const ScalarField& omega_i) {
  const Grid& g = omega_i.grid();
  int cells = 0, edges = 0;
  for (int k : g.inside_cells()) {
    if (omega_i[k] == 0.0) continue;
    ++cells;
    for (int dir = 0; dir < 4; ++dir) {
      const int nb = g.neighbor(k, dir);
      if (nb < 0 || omega_i[nb] == 0.0) ++edges;
    }
  }
  if (cells == 0) throw Error(ErrorCode::EmptySupport, "component has no support");
  const double area = cells * g.cell_area();
  const double perimeter = 0.25 * kPi * edges * g.h();
  return 4.0 * kPi * area / (perimeter * perimeter);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorCode::InvalidArgument, "line fit needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "line fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

bool AsymptoticsReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const SweepCheck& c) { return c.passed; });
}

int sweep_grid_size(const SweepConfig& cfg, double lambda) {
  if (!cfg.refine) return cfg.n;
  return static_cast<int>(std::lround(cfg.n * std::sqrt(lambda / cfg.base_lambda)));
}

namespace {

SweepRow solve_row(const SweepConfig& cfg, double lambda) {
  SweepRow row;
  row.lambda = lambda;
  row.n = sweep_grid_size(cfg, lambda);
  const VortexSpec& v = cfg.vortex;
  row.eps1 = epsilon_scale(v.kappa1, lambda);
  row.eps2 = epsilon_scale(v.kappa2, lambda);
  try {
    const GridPtr grid = discretize(cfg.domain, row.n);
    row.h = grid->h();
    const GreenOperator green = build_green(grid);
    SolverConfig sc{v, lambda, cfg.max_iters, cfg.energy_tol, std::nullopt};
    const SteadyPatch p = solve_steady(sc, green);
    row.cells1 = static_cast<int>(p.cells1.size());
    row.cells2 = static_cast<int>(p.cells2.size());
    row.under_resolved = std::min(row.cells1, row.cells2) < cfg.min_cells;
    row.iterations = p.iterations;
    row.diam1 = patch_diameter(p.omega1);
    row.diam2 = patch_diameter(p.omega2);
    row.centroid1 = centroid(p.omega1, v.kappa1, lambda);
    row.centroid2 = centroid(p.omega2, v.kappa2, lambda);
    row.dist1 = distance(row.centroid1, v.b1.center);
    row.dist2 = distance(row.centroid2, v.b2.center);
    row.mu1 = p.mu1;
    row.mu2 = p.mu2;
    row.energy = p.energy;
    row.core = core_energy(p);
    const EnergyBounds eb = energy_bounds_check(p, green);
    row.energy_testfn = eb.energy_testfn;
    row.mu_sum = eb.mu_sum;
    row.mu_bound = eb.mu_bound;
    row.iso1 = isoperimetric_ratio(p.omega1);
    row.iso2 = isoperimetric_ratio(p.omega2);
    row.psi_max = p.psi.psi.max_abs();
  } catch (const Error& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

}  // namespace

AsymptoticsReport sweep_lambda(const SweepConfig& cfg, std::span<const double> lambdas) {
  if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "empty lambda list");
  std::vector<double> sorted(lambdas.begin(), lambdas.end());
  std::sort(sorted.begin(), sorted.end());

  AsymptoticsReport rep;
  for (double lambda : sorted) rep.rows.push_back(solve_row(cfg, lambda));

  const VortexSpec& v = cfg.vortex;
  const double k2 = v.kappa1 * v.kappa1 + v.kappa2 * v.kappa2;
  rep.energy_slope_target = k2 / (8.0 * kPi);
  rep.mu_slope_target = k2 / (4.0 * kPi);

  std::vector<const SweepRow*> ok;
  for (const auto& r : rep.rows)
    if (!r.failed) ok.push_back(&r);
  auto add = [&](std::string name, bool passed, std::string detail) {
    rep.checks.push_back({std::move(name), passed, std::move(detail)});
  };

  int failed = static_cast<int>(rep.rows.size() - ok.size());
  add("rows_solved", failed == 0, fmt::format("{} of {} rows failed", failed, rep.rows.size()));
  if (ok.empty()) return rep;

  bool energy_ok = true, mu_ok = true, core_ok = true;
  double core_min = std::numeric_limits<double>::infinity(), core_max = -core_min;
  rep.diam_ratio_min = std::numeric_limits<double>::infinity();
  rep.diam_ratio_max = -rep.diam_ratio_min;
  for (const SweepRow* r : ok) {
    energy_ok = energy_ok && r->energy >= r->energy_testfn;
    mu_ok = mu_ok && r->mu1 > 0.0 && r->mu2 > 0.0;
    core_ok = core_ok && r->core >= -r->lambda * r->h * r->h * r->psi_max;
    core_min = std::min(core_min, r->core);
    core_max = std::max(core_max, r->core);
    for (double q : {r->diam1 / r->eps1, r->diam2 / r->eps2}) {
      rep.diam_ratio_min = std::min(rep.diam_ratio_min, q);
      rep.diam_ratio_max = std::max(rep.diam_ratio_max, q);
    }
  }
  add("energy_above_test_function", energy_ok, "E(omega) >= E(test function) on every row");
  add("mu_positive", mu_ok, "mu_1 > 0 and mu_2 > 0 on every row");
  add("diameter_window", rep.diam_ratio_min >= cfg.diam_window_lo && rep.diam_ratio_max <= cfg.diam_window_hi,
      fmt::format("diam/eps in [{:.4f}, {:.4f}], window [{}, {}]", rep.diam_ratio_min, rep.diam_ratio_max,
                  cfg.diam_window_lo, cfg.diam_window_hi));

  bool shrinking = true, approaching = true;
  for (std::size_t k = 1; k < ok.size(); ++k) {
    const SweepRow &a = *ok[k - 1], &b = *ok[k];
    shrinking = shrinking && b.diam1 < a.diam1 && b.diam2 < a.diam2;
    approaching = approaching && b.dist1 <= a.dist1 + b.h && b.dist2 <= a.dist2 + b.h;
  }
  const SweepRow& last = *ok.back();
  add("diameter_decreasing", shrinking, "diam_i decreases with lambda");
  add("centroid_nonincreasing", approaching, "centroid distance nonincreasing up to one cell");
  add("centroid_final", std::max(last.dist1, last.dist2) <= 3.0 * last.h,
      fmt::format("max distance {:.3e} at lambda {} vs 3h = {:.3e}", std::max(last.dist1, last.dist2), last.lambda,
                  3.0 * last.h));

  rep.core_ratio = core_min > 0.0 ? core_max / core_min : std::numeric_limits<double>::infinity();
  add("core_energy_bounded", core_ok && rep.core_ratio <= cfg.core_ratio_max,
      fmt::format("max/min core energy {:.4f}", rep.core_ratio));

  if (ok.size() >= 2) {
    std::vector<double> x, e, m;
    for (const SweepRow* r : ok) {
      x.push_back(std::log(r->lambda));
      e.push_back(r->energy);
      m.push_back(r->mu_sum);
    }
    rep.energy_fit = fit_line(x, e);
    rep.mu_fit = fit_line(x, m);
    const double de = std::abs(rep.energy_fit.slope / rep.energy_slope_target - 1.0);
    const double dm = std::abs(rep.mu_fit.slope / rep.mu_slope_target - 1.0);
    add("energy_slope", de <= cfg.slope_tolerance,
        fmt::format("slope {:.5f} vs {:.5f} ({:.1f}% off)", rep.energy_fit.slope, rep.energy_slope_target, 100 * de));
    add("mu_slope", rep.mu_fit.slope > 0.0 && dm <= cfg.slope_tolerance,
        fmt::format("slope {:.5f} vs {:.5f} ({:.1f}% off)", rep.mu_fit.slope, rep.mu_slope_target, 100 * dm));
  }
  return rep;
}

}  // namespace vpatch
