#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vpatch/asymptotics.hpp"

using namespace vpatch;

namespace {

VortexSpec disk_spec() {
  const auto g = PointGreen::disk();
  const KRPoint seed{{0.3, 0.0}, {-0.3, 0.0}};
  return vortex_from(find_local_min(seed, default_search_box(seed, g.domain()), g));
}

SweepConfig disk_sweep(bool refine) {
  SweepConfig cfg;
  cfg.vortex = disk_spec();
  cfg.refine = refine;
  return cfg;
}

const SweepCheck& check_named(const AsymptoticsReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("no check " + name);
}

}  // namespace

TEST_CASE("epsilon scale") {
  CHECK(epsilon_scale(1.0, 100.0 / oracle::kPi) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(epsilon_scale(-2.0, 200.0 / oracle::kPi) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(epsilon_scale(1.0, 400.0) == doctest::Approx(0.5 * epsilon_scale(1.0, 100.0)).epsilon(1e-15));
  CHECK_THROWS_AS(epsilon_scale(0.0, 1.0), Error);
  CHECK_THROWS_AS(epsilon_scale(1.0, -1.0), Error);
}

TEST_CASE("centroid") {
  auto g = discretize(Domain::unit_disk(), 128);
  const Vec2 c{0.23, -0.17};
  const double r = 0.1;
  const int cells = static_cast<int>(ball_cells(*g, {c, r}).size());
  const double lambda = 1.0 / (cells * g->cell_area());  // exact unit circulation
  auto w = sample(g, [&](Vec2 p) { return distance(p, c) < r ? lambda : 0.0; });
  CHECK(distance(centroid(w, 1.0, lambda), c) <= g->h());
  CHECK(distance(centroid(-1.0 * w, -1.0, lambda), c) <= g->h());
  try {
    centroid(w, 2.0, lambda);
    FAIL("expected CirculationMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CirculationMismatch);
  }
}

TEST_CASE("core energy and energy bounds on a converged patch") {
  auto grid = discretize(Domain::unit_disk(), 256);
  auto green = build_green(grid);
  const VortexSpec spec = disk_spec();
  const double lambda = 200.0;
  const SteadyPatch p = solve_steady({spec, lambda}, green);
  const double h = grid->h();

  const double t = core_energy(p);
  CHECK(t >= -lambda * h * h * p.psi.psi.max_abs());
  CHECK(t < p.energy);

  // Mirror symmetry of the configuration carries over to the centroids.
  const Vec2 c1 = centroid(p.omega1, spec.kappa1, lambda), c2 = centroid(p.omega2, spec.kappa2, lambda);
  CHECK(std::abs(c1.x + c2.x) <= h);
  CHECK(std::abs(c1.y - c2.y) <= h);

  const EnergyBounds eb = energy_bounds_check(p, green);
  CHECK(eb.holds);
  CHECK(eb.energy >= eb.energy_testfn);
  CHECK(eb.mu_sum == doctest::Approx(p.mu1 + p.mu2));
  CHECK(eb.mu_bound == doctest::Approx(-std::log(epsilon_scale(1.0, lambda)) / oracle::kPi));

  const double ratio = patch_diameter(p.omega1) / epsilon_scale(1.0, lambda);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 4.0);

  SteadyPatch zero = p;
  zero.omega1 = zero.omega2 = ScalarField(grid, 0.0);
  CHECK(core_energy(zero) == 0.0);

  SteadyPatch weak = p;
  weak.lambda = 10.0;
  CHECK_THROWS_AS(energy_bounds_check(weak, green), Error);
}

TEST_CASE("isoperimetric ratio") {
  auto g = discretize(Domain::unit_disk(), 256);
  auto disc = sample(g, [](Vec2 p) { return norm(p) < 0.2 ? 1.0 : 0.0; });
  CHECK(isoperimetric_ratio(disc) == doctest::Approx(1.0).epsilon(0.05));
  auto slab = sample(g, [](Vec2 p) { return std::abs(p.x) < 0.02 && std::abs(p.y) < 0.3 ? 1.0 : 0.0; });
  CHECK(isoperimetric_ratio(slab) < 0.5);
  CHECK_THROWS_AS(isoperimetric_ratio(ScalarField(g, 0.0)), Error);
}

TEST_CASE("line fit") {
  const std::vector<double> x{1, 2, 4, 7}, y{3, 5, 9, 15};
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST_CASE("sweep with refinement: canonical disk run") {
  const std::vector<double> lambdas{800, 100, 400, 200};
  const AsymptoticsReport r = sweep_lambda(disk_sweep(true), lambdas);
  REQUIRE(r.rows.size() == 4);
  for (std::size_t k = 1; k < r.rows.size(); ++k) CHECK(r.rows[k].lambda > r.rows[k - 1].lambda);
  for (const auto& row : r.rows) {
    CHECK_FALSE(row.failed);
    CHECK_FALSE(row.under_resolved);
    CHECK(std::isfinite(row.energy));
    CHECK(row.energy >= row.energy_testfn);
    CHECK(row.n == sweep_grid_size(disk_sweep(true), row.lambda));
  }
  CHECK(r.rows.front().n == 181);
  CHECK(r.rows.back().n == 512);
  CHECK(r.energy_slope_target == doctest::Approx(1.0 / (4.0 * oracle::kPi)));
  for (const auto& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
  CHECK(r.passed());
}

TEST_CASE("sweep on a fixed grid flags the under-resolved row") {
  const std::vector<double> lambdas{200, 800};
  const AsymptoticsReport r = sweep_lambda(disk_sweep(false), lambdas);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].n == 256);
  CHECK(r.rows[1].n == 256);
  CHECK_FALSE(r.rows[0].under_resolved);
  CHECK(r.rows[1].under_resolved);
  CHECK(r.rows[1].cells1 == 20);
}

TEST_CASE("sweep isolates errors per row") {
  const std::vector<double> one{200};
  const AsymptoticsReport single = sweep_lambda(disk_sweep(false), one);
  CHECK(single.rows.size() == 1);
  CHECK(check_named(single, "rows_solved").passed);

  const std::vector<double> lambdas{5, 200, 400};
  const AsymptoticsReport r = sweep_lambda(disk_sweep(false), lambdas);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].failed);
  CHECK(r.rows[0].error.find("InfeasibleArea") != std::string::npos);
  CHECK_FALSE(r.rows[1].failed);
  CHECK_FALSE(r.rows[2].failed);
  CHECK_FALSE(check_named(r, "rows_solved").passed);
  CHECK_FALSE(r.passed());
}
