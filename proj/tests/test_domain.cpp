#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vpatch/domain.hpp"
#include "vpatch/field_io.hpp"

using namespace vpatch;

namespace {

MaskedBitmap make_bitmap(const std::vector<std::string>& rows_top_down) {
  MaskedBitmap b;
  b.rows = static_cast<int>(rows_top_down.size());
  b.cols = static_cast<int>(rows_top_down.front().size());
  b.mask.resize(static_cast<std::size_t>(b.rows) * b.cols);
  for (int r = 0; r < b.rows; ++r)
    for (int c = 0; c < b.cols; ++c)
      b.mask[static_cast<std::size_t>(b.rows - 1 - r) * b.cols + c] = rows_top_down[r][c] == '#';
  return b;
}

}  // namespace

TEST_CASE("rectangle discretisation") {
  auto g = discretize(Domain::rectangle(1, 1), 4);
  CHECK(g->nx() == 4);
  CHECK(g->ny() == 4);
  CHECK(g->inside_count() == 16);
  CHECK(g->h() == doctest::Approx(0.25));

  auto wide = discretize(Domain::rectangle(2, 1), 32);
  CHECK(wide->nx() == 32);
  CHECK(wide->ny() == 16);
  CHECK_THROWS_AS(discretize(Domain::rectangle(1, 0.3), 4), Error);
}

TEST_CASE("disk mask area") {
  auto g = discretize(Domain::unit_disk(), 64);
  const double area = g->inside_count() * g->cell_area();
  CHECK(std::abs(area - oracle::kPi) / oracle::kPi < 0.05);

  // No isolated cells.
  for (int k : g->inside_cells()) {
    int nbrs = 0;
    for (int d = 0; d < 4; ++d) nbrs += g->neighbor(k, d) >= 0;
    CHECK(nbrs > 0);
  }
}

TEST_CASE("too coarse") {
  try {
    discretize(Domain::unit_disk(), 4);
    FAIL("expected ResolutionTooCoarse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooCoarse);
  }
}

TEST_CASE("bitmap validation") {
  const auto two_blobs = make_bitmap({
      "##....",
      "##....",
      "....##",
      "....##",
  });
  try {
    Domain::bitmap(two_blobs);
    FAIL("expected MaskNotSimplyConnected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MaskNotSimplyConnected);
  }

  const auto ring = make_bitmap({
      "#####",
      "#...#",
      "#...#",
      "#####",
  });
  CHECK_THROWS_AS(Domain::bitmap(ring), Error);

  // Diagonal contact only is two 4-components.
  CHECK_THROWS_AS(Domain::bitmap(make_bitmap({"#.", ".#"})), Error);

  const auto ell = make_bitmap({
      "########",
      "########",
      "####....",
      "####....",
      "####....",
      "####....",
      "####....",
      "####....",
  });
  Domain d = Domain::bitmap(ell);
  auto g = discretize(d, 8);
  CHECK(g->inside_count() == 40);
  CHECK(d.contains({0.1, 0.9}));
  CHECK_FALSE(d.contains({0.9, 0.1}));
  auto fine = discretize(d, 32);
  CHECK(fine->inside_count() == 40 * 16);
}

TEST_CASE("integrate") {
  auto rect = discretize(Domain::rectangle(2, 1), 32);
  CHECK(integrate(ScalarField(rect, 0.0)) == 0.0);
  CHECK(integrate(ScalarField(rect, 1.0)) == doctest::Approx(2.0).epsilon(rect->cell_area()));

  auto disk = discretize(Domain::unit_disk(), 128);
  CHECK(std::abs(integrate(ScalarField(disk, 1.0)) - oracle::kPi) / oracle::kPi < 0.02);
}

TEST_CASE("disk area converges at first order") {
  double first_err = 0.0, last_err = 0.0;
  for (int n : {32, 64, 128, 256}) {
    auto g = discretize(Domain::unit_disk(), n);
    const double err = std::abs(integrate(ScalarField(g, 1.0)) - oracle::kPi);
    CHECK(err <= 2.0 * oracle::kPi * g->h());
    if (n == 32) first_err = err;
    last_err = err;
  }
  CHECK(last_err < first_err);
}

TEST_CASE("integrate is linear") {
  std::mt19937_64 rng(7);
  auto g = discretize(Domain::unit_disk(), 48);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = oracle::random_field(g, rng), h = oracle::random_field(g, rng);
    const double a = coef(rng), b = coef(rng);
    const double lhs = integrate(a * f + b * h);
    const double rhs = a * integrate(f) + b * integrate(h);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("l1_distance examples") {
  auto g = discretize(Domain::rectangle(1, 1), 32);
  const double lambda = 5.0;
  auto indicator = [&](Ball b) { return sample(g, [&](Vec2 p) { return b.contains(p) ? lambda : 0.0; }); };

  auto f = indicator({{0.3, 0.3}, 0.1});
  CHECK(l1_distance(f, f) == 0.0);

  auto a = indicator({{0.3, 0.3}, 0.1}), b = indicator({{0.7, 0.7}, 0.1});
  const double area_a = integrate(a) / lambda, area_b = integrate(b) / lambda;
  CHECK(l1_distance(a, b) == doctest::Approx(lambda * (area_a + area_b)));

  // One-cell translation: exact symmetric-difference count.
  std::vector<double> shifted(g->size(), 0.0);
  for (int k : g->inside_cells()) {
    const int i = g->col(k), j = g->row(k);
    if (i + 1 < g->nx()) shifted[g->index(i + 1, j)] = a[k];
  }
  ScalarField t(g, shifted);
  int sym_diff = 0;
  for (int k : g->inside_cells()) sym_diff += (a[k] != 0.0) != (t[k] != 0.0);
  CHECK(l1_distance(a, t) == doctest::Approx(lambda * sym_diff * g->cell_area()));
  CHECK(sym_diff > 0);
}

TEST_CASE("l1_distance is a metric") {
  std::mt19937_64 rng(11);
  auto g = discretize(Domain::unit_disk(), 32);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = oracle::random_field(g, rng), h = oracle::random_field(g, rng), k = oracle::random_field(g, rng);
    CHECK(l1_distance(f, h) == l1_distance(h, f));
    CHECK(l1_distance(f, k) <= l1_distance(f, h) + l1_distance(h, k) + 1e-12);
    CHECK(l1_distance(f, h) > 0.0);
    CHECK(l1_distance(f, f) == 0.0);
  }
}

TEST_CASE("grid mismatch") {
  auto a = discretize(Domain::unit_disk(), 32), b = discretize(Domain::unit_disk(), 64);
  try {
    l1_distance(ScalarField(a, 1.0), ScalarField(b, 1.0));
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridMismatch);
  }
  // Structurally identical grids are interchangeable.
  auto c = discretize(Domain::unit_disk(), 32);
  CHECK(l1_distance(ScalarField(a, 1.0), ScalarField(c, 1.0)) == 0.0);
}

TEST_CASE("ball containment") {
  Domain disk = Domain::unit_disk();
  CHECK(ball_compactly_inside(disk, {{0.5, 0.0}, 0.4}, 0.0));
  CHECK_FALSE(ball_compactly_inside(disk, {{0.5, 0.0}, 0.5}, 0.0));
  CHECK_FALSE(ball_compactly_inside(disk, {{0.5, 0.0}, 0.45}, 0.06));
  auto g = discretize(disk, 64);
  auto cells = ball_cells(*g, {{0.5, 0.0}, 0.1});
  const double area = cells.size() * g->cell_area();
  CHECK(area == doctest::Approx(oracle::kPi * 0.01).epsilon(0.1));
}

TEST_CASE("field dump layout and round trip") {
  auto g = discretize(Domain::unit_disk(), 16);
  auto f = sample(g, [](Vec2 p) { return p.x + 2.0 * p.y; });
  const auto path = std::filesystem::temp_directory_path() / "vpatch_test_field.vpf";
  write_field_dump(path, f);
  CHECK(std::filesystem::file_size(path) == 32 + 8 * g->size());
  std::ifstream is(path, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  CHECK(std::string(magic, 4) == "VPF1");
  auto loaded = load_field(path, g);
  CHECK(l1_distance(f, loaded) == 0.0);
  auto d = read_field_dump(path);
  CHECK(d.nx == 16);
  CHECK(d.h == g->h());
  // Outside corner cell is written as zero.
  CHECK(d.values[0] == 0.0);

  const auto pgm = std::filesystem::temp_directory_path() / "vpatch_test_field.pgm";
  write_pgm(pgm, f);
  std::ifstream ps(pgm, std::ios::binary);
  std::string magic_pgm;
  int w = 0, h = 0, maxv = 0;
  ps >> magic_pgm >> w >> h >> maxv;
  CHECK(magic_pgm == "P5");
  CHECK(w == 16);
  CHECK(maxv == 255);
  CHECK(std::filesystem::file_size(pgm) == std::string("P5\n16 16\n255\n").size() + 256);
}
