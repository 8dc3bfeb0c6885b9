#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vpatch/green.hpp"

using namespace vpatch;
using oracle::kPi;

namespace {

ScalarField ball_indicator(const GridPtr& g, Vec2 c, double r, double value) {
  return sample(g, [&](Vec2 p) { return distance(p, c) < r ? value : 0.0; });
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("analytic disk kernel: frozen values") {
  CHECK(green_disk({0, 0}, {0.5, 0}) == doctest::Approx(0.110317800076325797).epsilon(1e-14));
  CHECK(robin_disk({0.6, 0.0}) == doctest::Approx(0.0710287984214729574).epsilon(1e-14));
  CHECK(robin_disk({0.0, 0.0}) == 0.0);
  CHECK(green_disk({0.3, -0.2}, {-0.1, 0.45}) == doctest::Approx(oracle::disk_green({0.3, -0.2}, {-0.1, 0.45})));
}

TEST_CASE("analytic disk kernel: properties") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int t = 0; t < 200; ++t) {
    const Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
    CHECK(green_disk(x, y) == doctest::Approx(green_disk(y, x)).epsilon(1e-13));
    CHECK(green_disk(x, y) > 0.0);
    CHECK(green_disk(x, y) == doctest::Approx(oracle::disk_green(x, y)).epsilon(1e-12));
    CHECK(regular_part_disk(x, x) == doctest::Approx(robin_disk(x)).epsilon(1e-12));
    CHECK(robin_disk(x) == doctest::Approx(oracle::disk_robin(x)).epsilon(1e-12));
  }
  // Vanishes on the boundary.
  for (double a = 0.0; a < 6.2; a += 0.37) {
    const Vec2 b{std::cos(a), std::sin(a)};
    CHECK(std::abs(green_disk(b, {0.2, -0.4})) < 1e-14);
  }
  // Robin function grows radially.
  double prev = -1.0;
  for (double r = 0.0; r < 0.99; r += 0.05) {
    const double v = robin_disk({0.0, r});
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(green_disk({0.1, 0.1}, {0.1, 0.1}), Error);
  CHECK_THROWS_AS(robin_disk({1.0, 0.0}), Error);
}

TEST_CASE("self-cell log average matches brute-force quadrature") {
  for (double h : {1.0, 0.1, 1.0 / 64}) {
    CHECK(self_cell_log_average(h) == doctest::Approx(oracle::cell_log_mean(h) / (2.0 * kPi)).epsilon(1e-5));
  }
}

TEST_CASE("apply of zero is zero on every backend") {
  auto disk = discretize(Domain::unit_disk(), 32);
  auto rect = discretize(Domain::rectangle(1, 1), 32);
  for (auto op : {build_green(disk), build_green(disk, GreenBackend::AnalyticDiskQuadrature), build_green(rect)}) {
    CHECK(op.apply(ScalarField(op.grid_ptr(), 0.0)).max_abs() == 0.0);
  }
  CHECK(build_green(rect).backend() == GreenBackend::FastRectangleSolve);
  CHECK(build_green(disk).backend() == GreenBackend::MaskedDirectSolve);
  CHECK_THROWS_AS(build_green(rect, GreenBackend::AnalyticDiskQuadrature), Error);
}

TEST_CASE("fast rectangle solve converges at second order") {
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    auto g = discretize(Domain::rectangle(kPi, kPi), n);
    auto op = build_green(g);
    auto omega = sample(g, [](Vec2 p) { return 2.0 * std::sin(p.x) * std::sin(p.y); });
    auto exact = sample(g, [](Vec2 p) { return std::sin(p.x) * std::sin(p.y); });
    errs.push_back(max_abs_diff(op.apply(omega), exact));
  }
  for (std::size_t k = 1; k < errs.size(); ++k) CHECK(std::log2(errs[k - 1] / errs[k]) >= 1.8);
  CHECK(errs.back() < 1e-3);
}

TEST_CASE("fast and masked solves agree on a rectangle") {
  auto g = discretize(Domain::rectangle(2, 1), 64);
  auto fast = build_green(g), masked = build_green(g, GreenBackend::MaskedDirectSolve);
  std::mt19937_64 rng(5);
  auto omega = oracle::random_field(g, rng);
  auto a = fast.apply(omega), b = masked.apply(omega);
  CHECK(max_abs_diff(a, b) <= 1e-10 * a.max_abs());
}

TEST_CASE("masked disk solve against the analytic quadrature") {
  auto g = discretize(Domain::unit_disk(), 128);
  auto masked = build_green(g), analytic = build_green(g, GreenBackend::AnalyticDiskQuadrature);
  auto omega = ball_indicator(g, {0.3, 0.1}, 0.3, 1.0) - ball_indicator(g, {-0.4, -0.2}, 0.2, 2.0);
  auto a = masked.apply(omega), b = analytic.apply(omega);
  CHECK(max_abs_diff(a, b) / b.max_abs() < 1e-2);
}

TEST_CASE("discrete Green column approximates the kernel away from the source") {
  auto g = discretize(Domain::unit_disk(), 128);
  auto op = build_green(g);
  const int src = g->cell_at({0.2, -0.1});
  REQUIRE(src >= 0);
  std::vector<double> delta(g->size(), 0.0);
  delta[src] = 1.0 / g->cell_area();
  auto col = op.apply(ScalarField(g, delta));
  const Vec2 y = g->center(src);
  double worst = 0.0;
  for (int k : g->inside_cells()) {
    const Vec2 x = g->center(k);
    if (distance(x, y) < 4.0 * g->h() || 1.0 - norm(x) < 4.0 * g->h()) continue;
    const double ref = oracle::disk_green(x, y);
    worst = std::max(worst, std::abs(col[k] - ref) / ref);
  }
  CHECK(worst < 0.02);
}

TEST_CASE("discrete operator is symmetric positive and monotone") {
  std::mt19937_64 rng(17);
  for (auto g : {discretize(Domain::unit_disk(), 40), discretize(Domain::rectangle(1.5, 1), 30)}) {
    auto op = build_green(g);
    for (int t = 0; t < 10; ++t) {
      auto f = oracle::random_field(g, rng), k = oracle::random_field(g, rng);
      const double fk = inner(f, op.apply(k)), kf = inner(k, op.apply(f));
      CHECK(fk == doctest::Approx(kf).epsilon(1e-10));
      CHECK(inner(f, op.apply(f)) > 0.0);
      // Maximum principle: nonnegative source gives nonnegative psi.
      for (std::size_t c = 0; c < g->size(); ++c) f.set(static_cast<int>(c), std::abs(f[static_cast<int>(c)]));
      CHECK(op.apply(f).min_value() >= 0.0);
    }
  }
}

TEST_CASE("laplacian inverts apply") {
  auto g = discretize(Domain::unit_disk(), 48);
  auto op = build_green(g);
  std::mt19937_64 rng(23);
  auto omega = oracle::random_field(g, rng);
  CHECK(max_abs_diff(op.laplacian(op.apply(omega)), omega) < 1e-8);
}

TEST_CASE("harmonic extension reproduces linear data") {
  auto g = discretize(Domain::unit_disk(), 64);
  auto op = build_green(g);
  auto ext = op.harmonic_extension([](Vec2 p) { return p.x - 0.5 * p.y; });
  auto exact = sample(g, [](Vec2 p) { return p.x - 0.5 * p.y; });
  CHECK(max_abs_diff(ext, exact) < 1e-3);
}

TEST_CASE("energy") {
  auto g = discretize(Domain::unit_disk(), 128);
  auto op = build_green(g);
  CHECK(energy(op, ScalarField(g, 0.0)) == 0.0);

  const double a = 0.485868271756645678, lambda = 100.0;
  auto omega = ball_indicator(g, {a, 0.0}, 0.06, lambda) - ball_indicator(g, {-a, 0.0}, 0.06, lambda);
  const double e = energy(op, omega);
  CHECK(e > 0.0);
  CHECK(energy(op, -1.0 * omega) == doctest::Approx(e).epsilon(1e-12));
  const double ref = oracle::disk_energy_double_sum(omega);
  CHECK(std::abs(e - ref) / ref < 0.01);
  // Oracle diagonal uses a 200x200 sub-cell rule, good to about 1e-6.
  CHECK(energy(build_green(g, GreenBackend::AnalyticDiskQuadrature), omega) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("velocity of a manufactured stream function") {
  std::vector<double> errs;
  for (int n : {32, 64}) {
    auto g = discretize(Domain::rectangle(kPi, kPi), n);
    auto psi = sample(g, [](Vec2 p) { return std::sin(p.x) * std::sin(p.y); });
    auto vel = velocity(psi);
    double err = 0.0;
    for (int k : g->inside_cells()) {
      const Vec2 p = g->center(k);
      err = std::max(err, std::abs(vel.u[k] - std::sin(p.x) * std::cos(p.y)));
      err = std::max(err, std::abs(vel.v[k] + std::cos(p.x) * std::sin(p.y)));
      const Vec2 grad = grad_at(psi, k);
      CHECK(grad.y == doctest::Approx(vel.u[k]));
      CHECK(-grad.x == doctest::Approx(vel.v[k]));
    }
    errs.push_back(err);
    CHECK(boundary_consistency(psi) < 1.0);
  }
  CHECK(errs[1] < 0.3 * errs[0]);
}

TEST_CASE("stream function is deterministic and vanishes at the wall") {
  auto g = discretize(Domain::unit_disk(), 96);
  auto op = build_green(g);
  auto omega = ball_indicator(g, {0.4, 0.0}, 0.1, 30.0) - ball_indicator(g, {-0.4, 0.0}, 0.1, 30.0);
  auto s1 = stream(op, omega), s2 = stream(op, omega);
  CHECK(max_abs_diff(s1.psi, s2.psi) == 0.0);
  CHECK(boundary_consistency(s1.psi) < 1.0);
  CHECK(s1.psi.all_finite());

  auto other = discretize(Domain::unit_disk(), 64);
  try {
    op.apply(ScalarField(other, 1.0));
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridMismatch);
  }
}
