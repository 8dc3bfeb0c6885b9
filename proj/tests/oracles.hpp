#pragma once

// Test-only reference computations. These deliberately avoid the library's
// own kernels so that they stay independent of the code they check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "vpatch/domain.hpp"

namespace oracle {

using vpatch::Vec2;

inline constexpr double kPi = 3.14159265358979323846;

/// Disk Green function in complex form: (1/2pi) ln(|1 - x conj(y)| / |x - y|).
inline double disk_green(Vec2 x, Vec2 y) {
  const std::complex<double> zx(x.x, x.y), zy(y.x, y.y);
  return std::log(std::abs(1.0 - zx * std::conj(zy)) / std::abs(zx - zy)) / (2.0 * kPi);
}

/// Regular part on the diagonal: ln(1/(1-|x|^2)) / 2pi, via the image point.
inline double disk_robin(Vec2 x) {
  const std::complex<double> z(x.x, x.y);
  const double r = std::abs(z);
  if (r == 0.0) return 0.0;
  const std::complex<double> image = z / (r * r);
  return std::log(1.0 / (r * std::abs(z - image))) / (2.0 * kPi);
}

/// Mean of ln(1/|p|) over [-h/2, h/2]^2 by brute-force subdivision.
inline double cell_log_mean(double h, int sub = 400) {
  double s = 0.0;
  const double d = h / sub;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b) {
      const double x = -0.5 * h + (a + 0.5) * d, y = -0.5 * h + (b + 0.5) * d;
      s += -0.5 * std::log(x * x + y * y);
    }
  return s / (double(sub) * sub);
}

/// E = 1/2 sum_ij w_i w_j G(x_i, x_j) h^4 over nonzero cells of a disk field;
/// diagonal cells use the sub-cell quadrature of the log part.
inline double disk_energy_double_sum(const vpatch::ScalarField& w) {
  const auto& g = w.grid();
  const double h = g.h();
  const double self_log = cell_log_mean(h, 200) / (2.0 * kPi);
  std::vector<int> cells;
  for (int k : g.inside_cells())
    if (w[k] != 0.0) cells.push_back(k);
  double s = 0.0;
  for (int i : cells)
    for (int j : cells) {
      const double kernel = i == j ? self_log - disk_robin(g.center(i)) : disk_green(g.center(i), g.center(j));
      s += w[i] * w[j] * kernel;
    }
  return 0.5 * s * h * h * h * h;
}

/// Closed form of H for the symmetric pair (+a, 0), (-a, 0) with kappa = (1, -1).
inline double kr_symmetric_disk(double a) { return std::log((1.0 + a * a) / (2.0 * a * (1.0 - a * a))) / kPi; }

/// Rectangle [0,W]x[0,H] Green function: closed-form Green function of the strip
/// across the shorter side plus exponentially convergent images along the longer.
struct RectangleGreen {
  double width, height;

  // (s, t): s across the strip (0, S), t along it.
  double strip(double s, double t, double sy, double ty, double S) const {
    const double c = std::cosh(kPi * (t - ty) / S);
    return std::log((c - std::cos(kPi * (s + sy) / S)) / (c - std::cos(kPi * (s - sy) / S))) / (4.0 * kPi);
  }
  void coords(Vec2 p, double& s, double& t, double& S, double& T) const {
    if (height <= width) {
      s = p.y; t = p.x; S = height; T = width;
    } else {
      s = p.x; t = p.y; S = width; T = height;
    }
  }
  double green(Vec2 x, Vec2 y) const {
    double s, t, S, T, sy, ty;
    coords(x, s, t, S, T);
    coords(y, sy, ty, S, T);
    double g = 0.0;
    for (int j = -8; j <= 8; ++j) g += strip(s, t, sy, ty + 2 * j * T, S) - strip(s, t, sy, -ty + 2 * j * T, S);
    return g;
  }
  double robin(Vec2 x) const {
    double s, t, S, T;
    coords(x, s, t, S, T);
    double v = -std::log(2.0 * S / kPi * std::sin(kPi * s / S)) / (2.0 * kPi);
    for (int j = -8; j <= 8; ++j) {
      if (j != 0) v -= strip(s, t, s, t + 2 * j * T, S);
      v += strip(s, t, s, -t + 2 * j * T, S);
    }
    return v;
  }
  double kr(Vec2 x1, Vec2 x2, double k1 = 1.0, double k2 = -1.0) const {
    return -2.0 * k1 * k2 * green(x1, x2) + k1 * k1 * robin(x1) + k2 * k2 * robin(x2);
  }
};

inline vpatch::ScalarField random_field(const vpatch::GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(grid->size(), 0.0);
  for (int k : grid->inside_cells()) v[k] = u(rng);
  return vpatch::ScalarField(grid, std::move(v));
}

}  // namespace oracle
