#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vpatch/evolution.hpp"

using namespace vpatch;

namespace {

// Coarse fixture: n = 128 and lambda = 50 keep 82 cells per patch, as at
// n = 256, lambda = 200, for a quarter of the work.
struct Fixture {
  GridPtr grid = discretize(Domain::unit_disk(), 128);
  GreenOperator green = build_green(grid);
  double lambda = 50.0;
  SteadyPatch base = [this] {
    const auto g = PointGreen::disk();
    const KRPoint seed{{0.3, 0.0}, {-0.3, 0.0}};
    const VortexSpec spec = vortex_from(find_local_min(seed, default_search_box(seed, g.domain()), g));
    return solve_steady({spec, lambda}, green);
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

double support_mass(const ScalarField& f) {
  double m = 0.0;
  for (int k : f.grid().inside_cells()) m += std::abs(f[k]);
  return m * f.grid().cell_area();
}

// E ln(1/|x - y|) for x, y uniform on two h-cells whose centres differ by d,
// by midpoint subdivision of both cells.
double pair_log_mean(Vec2 d, double h, int sub = 16) {
  double s = 0.0;
  const double q = h / sub;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b)
      for (int c = 0; c < sub; ++c)
        for (int e = 0; e < sub; ++e) {
          const double x = d.x + (a - c) * q, y = d.y + (b - e) * q;
          s -= 0.5 * std::log(x * x + y * y);
        }
  return s / std::pow(double(sub), 4);
}

// Same cell: the difference of two uniform points has density
// (1 - |u|)(1 - |v|) on [-1, 1]^2 in units of h.
double self_log_mean(double h, int sub = 2000) {
  double s = 0.0;
  const double q = 1.0 / sub;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b) {
      const double u = (a + 0.5) * q, v = (b + 0.5) * q;
      s += (1 - u) * (1 - v) * 0.5 * std::log(u * u + v * v);
    }
  return -std::log(h) - 4.0 * s * q * q;
}

int differing_cells(const ScalarField& a, const ScalarField& b) {
  int n = 0;
  for (int k : a.grid().inside_cells()) n += a[k] != b[k];
  return n;
}

}  // namespace

TEST_CASE("interpolation") {
  auto g = discretize(Domain::unit_disk(), 64);
  auto lin = sample(g, [](Vec2 p) { return 2.0 * p.x - 3.0 * p.y + 0.5; });
  CHECK(interpolate(lin, g->center(g->cell_at({0.1, 0.2}))) == doctest::Approx(lin[g->cell_at({0.1, 0.2})]));
  CHECK(interpolate(lin, {0.123, -0.271}) == doctest::Approx(2.0 * 0.123 + 3.0 * 0.271 + 0.5).epsilon(1e-12));
  // Constants survive the renormalised wall stencil.
  auto one = sample(g, [](Vec2) { return 1.0; });
  for (double a : {0.0, 0.7, 2.1, 4.0}) CHECK(interpolate(one, 0.995 * Vec2{std::cos(a), std::sin(a)}) == doctest::Approx(1.0));
  // Clipped to the stencil range.
  auto step = sample(g, [](Vec2 p) { return p.x < 0.0 ? -5.0 : 7.0; });
  for (double x = -0.05; x <= 0.05; x += 0.003) {
    const double v = interpolate(step, {x, 0.01});
    CHECK(v >= -5.0);
    CHECK(v <= 7.0);
  }
}

TEST_CASE("reflection into the domain") {
  const Domain disk = Domain::unit_disk();
  const Vec2 in{0.3, -0.2};
  CHECK(reflect_into(disk, in) == in);
  const Vec2 out{1.05, 0.0};
  const Vec2 r = reflect_into(disk, out);
  CHECK(disk.contains(r));
  CHECK(r.x == doctest::Approx(0.95));
  CHECK(r.y == doctest::Approx(0.0));
  const Domain rect = Domain::rectangle(2.0, 1.0);
  const Vec2 q = reflect_into(rect, {-0.1, 1.2});
  CHECK(q.x == doctest::Approx(0.1));
  CHECK(q.y == doctest::Approx(0.8));
}

TEST_CASE("rank remap") {
  auto g = discretize(Domain::rectangle(1, 1), 4);
  std::vector<double> f(16);
  for (int k = 0; k < 16; ++k) f[k] = (k * 7) % 16;
  const std::vector<double> values{9, 9, 9, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, -2, -2, -2};
  const ScalarField out = rank_remap(ScalarField(g, f), values);
  CHECK(sorted_values(out) == values);
  // The largest f gets the largest value.
  const int top = static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
  CHECK(out[top] == 9.0);
  const int bottom = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  CHECK(out[bottom] == -2.0);

  // Ties go to the preferred cells.
  std::vector<double> pref(16, 0.0);
  pref[15] = pref[14] = pref[13] = 1.0;
  const ScalarField prefer(g, pref);
  const ScalarField tied = rank_remap(ScalarField(g, 0.0), values, &prefer);
  CHECK(tied[13] == 9.0);
  CHECK(tied[14] == 9.0);
  CHECK(tied[15] == 9.0);
  CHECK(tied[0] == 1.0);
  CHECK_THROWS_AS(rank_remap(ScalarField(g, 0.0), {1.0, 2.0}), Error);
}

TEST_CASE("step: zero field, CFL guard, conservation and bounds") {
  const Fixture& f = fixture();
  EvolutionState zero = start_evolution(ScalarField(f.grid, 0.0), f.green, 0.01);
  for (int k = 0; k < 3; ++k) zero = step(zero, f.green);
  CHECK(zero.omega.max_abs() == 0.0);

  const double vmax = max_speed(velocity(f.base.psi));
  EvolutionState bad = start_evolution(f.base.omega, f.green, 0.6 * f.grid->h() / vmax);
  try {
    step(bad, f.green);
    FAIL("expected CFLViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CFLViolation);
  }

  for (AdvectionScheme scheme : {AdvectionScheme::Mapped, AdvectionScheme::Direct}) {
    EvolutionState s = start_evolution(f.base.omega, f.green, 0.4 * f.grid->h() / vmax, scheme);
    const double m0 = integrate(s.omega);
    for (int k = 0; k < 10; ++k) {
      const double before = integrate(s.omega);
      s = step(s, f.green);
      CHECK(std::abs(integrate(s.omega) - before) <= 1e-10);
      CHECK(s.omega.min_value() >= -f.lambda);
      CHECK(s.omega.max_value() <= f.lambda);
    }
    CHECK(std::abs(integrate(s.omega) - m0) <= 1e-10);
    CHECK(s.ledger.size() == 11);
    if (scheme == AdvectionScheme::Mapped) CHECK(s.ledger.back().distribution_error == 0.0);
  }
}

TEST_CASE("map deformation is one for rigid motions") {
  auto g = discretize(Domain::unit_disk(), 64);
  auto rx = sample(g, [](Vec2 p) { return rotate(p, 0.7).x + 0.1; });
  auto ry = sample(g, [](Vec2 p) { return rotate(p, 0.7).y; });
  CHECK(map_deformation(rx, ry) == doctest::Approx(1.0).epsilon(1e-12));
  auto sx = sample(g, [](Vec2 p) { return p.x + 3.0 * p.y; });
  auto sy = sample(g, [](Vec2 p) { return p.y; });
  CHECK(map_deformation(sx, sy) > 2.0);
}

TEST_CASE("centred disc stays put") {
  auto g = discretize(Domain::unit_disk(), 128);
  auto green = build_green(g);
  const double r = 0.3;
  auto disc = sample(g, [&](Vec2 p) { return norm(p) < r ? 1.0 : 0.0; });
  const double turnover = 4.0 * oracle::kPi;  // 4 pi |disc| / kappa at unit vorticity
  const ProbeResult res = evolve_and_measure(disc, disc, turnover, 1.0, green);
  // Rotating a staircase circle flips rim cells; that is O(h / r) of the mass.
  CHECK(res.max_l1 / support_mass(disc) <= g->h() / r);
  CHECK(res.mass_drift <= 1e-10);
  CHECK(res.bounds_exact);
  CHECK(res.energy_drift <= 0.02);
  CHECK(res.samples.size() == 21);
}

TEST_CASE("turnover and radial patch") {
  const Fixture& f = fixture();
  CHECK(turnover_time(f.base) == doctest::Approx(4.0 * oracle::kPi * 82 * f.grid->cell_area()));
  const ScalarField rad = radial_patch(f.grid, -1.0, f.lambda);
  CHECK(integrate(rad) == doctest::Approx(-82 * f.lambda * f.grid->cell_area()));
  CHECK(rad.min_value() == -f.lambda);
  CHECK(rad[f.grid->cell_at({0.001, 0.001})] == -f.lambda);
}

TEST_CASE("perturbations stay in the rearrangement class") {
  const Fixture& f = fixture();
  const SteadyPatch& b = f.base;
  const double h = f.grid->h();
  const auto hist = sorted_values(b.omega);

  CHECK(differing_cells(perturb(b, Perturbation::none()), b.omega) == 0);
  CHECK(differing_cells(perturb(b, Perturbation::translate(1, {0.0, 0.0})), b.omega) == 0);
  CHECK(differing_cells(perturb(b, Perturbation::rotate(0.0)), b.omega) == 0);

  SUBCASE("one-cell translation") {
    const ScalarField t = perturb(b, Perturbation::translate(1, {h, 0.0}));
    CHECK(sorted_values(t) == hist);
    // Oracle: cells of omega_1 whose left neighbour is empty, and vice versa.
    int band = 0;
    for (int k : f.grid->inside_cells()) {
      const bool here = b.omega1[k] != 0.0;
      const int left = f.grid->neighbor(k, 1);
      const bool there = left >= 0 && b.omega1[left] != 0.0;
      band += here != there;
    }
    CHECK(l1_distance(t, b.omega) == doctest::Approx(f.lambda * f.grid->cell_area() * band));
    CHECK(Perturbation::translate(1, {h, 0.0}).magnitude() == doctest::Approx(h));
  }
  SUBCASE("rotation by pi maps the odd pair onto its negative") {
    const ScalarField r = perturb(b, Perturbation::rotate(oracle::kPi));
    CHECK(sorted_values(r) == hist);
    CHECK(differing_cells(r, -1.0 * b.omega) <= 2 * (b.tie_cells + 2));
  }
  SUBCASE("area-preserving flow") {
    const BumpTest xi{b.vortex.b1.center + Vec2{0.02, 0.01}, 0.15, BumpShape::Tensor};
    const ScalarField w = perturb(b, Perturbation::flow(xi, 0.1));
    CHECK(sorted_values(w) == hist);
    CHECK(l1_distance(w, b.omega) > 0.0);
  }
  SUBCASE("leaving the domain") {
    try {
      perturb(b, Perturbation::translate(1, {0.6, 0.0}));
      FAIL("expected SupportLeavesDomain");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SupportLeavesDomain);
    }
  }
}

TEST_CASE("flow map is area preserving and invertible") {
  const BumpTest xi{{0.1, -0.05}, 0.3, BumpShape::Tensor};
  const double s = 0.1;
  for (Vec2 x : {Vec2{0.12, -0.02}, Vec2{0.0, 0.1}, Vec2{0.3, -0.2}}) {
    const Vec2 y = flow_map(xi, x, s);
    const Vec2 back = flow_map(xi, y, -s);
    CHECK(distance(back, x) < 1e-10);
    const double d = 1e-5;
    const Vec2 ex = (1.0 / (2 * d)) * (flow_map(xi, x + Vec2{d, 0}, s) - flow_map(xi, x - Vec2{d, 0}, s));
    const Vec2 ey = (1.0 / (2 * d)) * (flow_map(xi, x + Vec2{0, d}, s) - flow_map(xi, x - Vec2{0, d}, s));
    CHECK(ex.x * ey.y - ex.y * ey.x == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("stability probes") {
  const Fixture& f = fixture();
  ProbeOptions opts;
  opts.sample_every = 0.1;

  const ProbeResult still = stability_probe(f.base, Perturbation::none(), 0.5, f.green, opts);
  CHECK(still.initial == 0.0);
  CHECK(still.ratio == 0.0);
  CHECK(still.samples.size() == 6);
  CHECK(still.samples.back().t == doctest::Approx(0.5));
  CHECK(still.mass_drift <= 1e-10);
  CHECK(still.bounds_exact);

  const ProbeResult moved =
      stability_probe(f.base, Perturbation::translate(1, {f.grid->h(), 0.0}), 0.5, f.green, opts);
  CHECK(moved.initial > 0.0);
  CHECK(moved.ratio >= 1.0);
  CHECK(moved.mass_drift <= 1e-6);
  CHECK(moved.bounds_exact);
  CHECK(moved.energy_drift <= 0.02);

  // Violent rearrangement: one patch moved by three diameters.
  const double diam = patch_diameter(f.base.omega1);
  const ProbeResult far = stability_probe(f.base, Perturbation::translate(1, {0.0, 3.0 * diam}), 0.5, f.green, opts);
  CHECK(far.initial == doctest::Approx(2.0 * integrate(f.base.omega1)).epsilon(1e-12));
  CHECK(far.mass_drift <= 1e-6);
  CHECK(far.bounds_exact);
}

TEST_CASE("level-set comparison chain") {
  const Fixture& f = fixture();
  const SteadyPatch& b = f.base;

  const LocalMaxResult self = local_max_test(b, b.omega, f.green);
  CHECK(self.nu1 == b.mu1);
  CHECK(self.nu2 == b.mu2);
  CHECK(l1_distance(self.bar, b.omega) == 0.0);
  CHECK(self.e_candidate == doctest::Approx(b.energy).epsilon(1e-12));
  CHECK(self.e_bar == doctest::Approx(b.energy).epsilon(1e-12));
  CHECK(self.chain_holds());

  const ScalarField shifted = perturb(b, Perturbation::translate(2, {0.0, f.grid->h()}));
  const LocalMaxResult one = local_max_test(b, shifted, f.green);
  CHECK(one.chain_holds());
  CHECK(one.e_candidate < one.e_base);

  const ScalarField far = perturb(b, Perturbation::translate(1, {0.0, 0.3}));
  try {
    local_max_test(b, far, f.green);
    FAIL("expected Inapplicable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Inapplicable);
  }
  CHECK_THROWS_AS(local_max_test(b, 0.5 * b.omega, f.green), Error);
}

TEST_CASE("seeded small rearrangements") {
  const Fixture& f = fixture();
  const auto a = small_rearrangements(f.base, 16, 42);
  const auto again = small_rearrangements(f.base, 16, 42);
  const auto other = small_rearrangements(f.base, 16, 43);
  REQUIRE(a.size() == 16);
  const auto hist = sorted_values(f.base.omega);
  int differ = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(sorted_values(a[k]) == hist);
    CHECK(l1_distance(a[k], f.base.omega) > 0.0);
    CHECK(differing_cells(a[k], again[k]) == 0);
    differ += differing_cells(a[k], other[k]) > 0;
    CHECK(local_max_test(f.base, a[k], f.green).chain_holds());
  }
  CHECK(differ > 0);
}

TEST_CASE("log self-interaction against cell quadrature") {
  auto g = discretize(Domain::unit_disk(), 16);
  std::vector<double> v(g->size(), 0.0);
  // Off-diagonal pairs use the centre-to-centre kernel, whose error is
  // O((h / d)^4) since ln is harmonic; keep the cells a few apart.
  const int a = g->cell_at({0.03, 0.03}), b = g->cell_at({0.41, 0.03}), c = g->cell_at({0.03, -0.47});
  v[a] = 2.0;
  v[b] = 1.0;
  v[c] = -0.5;
  const ScalarField f(g, v);
  const double h = g->h();
  const double diag = self_log_mean(h);
  double ref = 0.0;
  const int cells[3] = {a, b, c};
  for (int p : cells)
    for (int q : cells) {
      const double m = p == q ? diag : pair_log_mean(g->center(p) - g->center(q), h);
      ref += v[p] * v[q] * m;
    }
  ref *= h * h * h * h;
  CHECK(log_self_interaction(f) == doctest::Approx(ref).epsilon(1e-4));

  std::vector<double> one(g->size(), 0.0);
  one[a] = 3.0;
  CHECK(log_self_interaction(ScalarField(g, one)) == doctest::Approx(9.0 * h * h * h * h * diag).epsilon(1e-8));
}

TEST_CASE("ball rearrangement dominates") {
  const Fixture& f = fixture();
  const SteadyPatch& b = f.base;
  const RieszReport same = riesz_check(b, b.omega);
  CHECK(same.passed());
  CHECK(same.ball[0] == doctest::Approx(same.candidate[0]).epsilon(1e-3));

  // Elongated rectangle of the same cell count.
  const std::size_t n = b.cells1.size();
  std::vector<int> cells = ball_cells(*f.grid, b.vortex.b1);
  const Vec2 c = b.vortex.b1.center;
  std::stable_sort(cells.begin(), cells.end(), [&](int p, int q) {
    const Vec2 a = f.grid->center(p) - c, d = f.grid->center(q) - c;
    return std::max(std::abs(a.x) / 4.0, std::abs(a.y)) < std::max(std::abs(d.x) / 4.0, std::abs(d.y));
  });
  std::vector<double> v(b.omega2.values().begin(), b.omega2.values().end());
  for (std::size_t k = 0; k < n; ++k) v[cells[k]] = f.lambda;
  const RieszReport slab = riesz_check(b, ScalarField(f.grid, v));
  CHECK(slab.ball[0] > slab.candidate[0] * (1.0 + 1e-2));
  CHECK(slab.passed());

  const auto shapes = riesz_candidates(b, 20, 7);
  REQUIRE(shapes.size() == 20);
  for (const auto& s : shapes) {
    CHECK(sorted_values(s) == sorted_values(b.omega));
    CHECK(riesz_check(b, s).passed());
  }

  auto rect = discretize(Domain::rectangle(1, 1), 32);
  try {
    riesz_check(b, ScalarField(rect, 0.0));
    FAIL("expected NonDiskDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonDiskDomain);
  }
}
