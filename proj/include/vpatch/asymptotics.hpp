#pragma once

// Lambda sweeps of the steady solver and the scale diagnostics read off each
// converged patch: core radius, diameter, centroid drift, core energy and the
// ln(lambda) growth of the energy and of the level values.

#include <span>
#include <string>
#include <vector>

#include "vpatch/steady_solver.hpp"

namespace vpatch {

/// Radius of the disc of area |kappa| / lambda.
double epsilon_scale(double kappa, double lambda);

/// (1/kappa) int x omega_i. Throws CirculationMismatch when the field does not
/// carry kappa to within lambda h^2.
Vec2 centroid(const ScalarField& omega_i, double kappa, double lambda);

/// 1/2 sum_i int (psi - sign_i mu_i) omega_i.
double core_energy(const SteadyPatch& patch);

struct EnergyBounds {
  double energy = 0.0;
  double energy_testfn = 0.0;
  double mu_sum = 0.0;     // sum |kappa_i| mu_i
  double mu_bound = 0.0;   // -(1/2pi) sum kappa_i^2 ln eps_i, the constant-free part
  bool holds = false;      // energy >= energy_testfn
};

/// Compares the patch with the two-ball test function on the same grid.
/// Throws TestFunctionInfeasible when the core disc leaks out of a ball.
EnergyBounds energy_bounds_check(const SteadyPatch& patch, const GreenOperator& green);

/// 4 pi A / P^2 of one component, with the staircase perimeter scaled by
/// pi / 4 so that lattice discs come out near 1.
double isoperimetric_ratio(const ScalarField& omega_i);

struct SweepRow {
  double lambda = 0.0;
  int n = 0;
  double h = 0.0;
  bool failed = false;
  std::string error;
  bool under_resolved = false;
  int cells1 = 0, cells2 = 0;
  int iterations = 0;
  double eps1 = 0.0, eps2 = 0.0;
  double diam1 = 0.0, diam2 = 0.0;
  Vec2 centroid1, centroid2;
  double dist1 = 0.0, dist2 = 0.0;  // centroid to the point-vortex location
  double mu1 = 0.0, mu2 = 0.0;
  double energy = 0.0;
  double core = 0.0;
  double energy_testfn = 0.0;
  double mu_sum = 0.0;
  double mu_bound = 0.0;
  double iso1 = 0.0, iso2 = 0.0;
  double psi_max = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (x_k, y_k).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct SweepCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SweepConfig {
  Domain domain;
  VortexSpec vortex;
  int n = 256;
  /// Scale n with sqrt(lambda / base_lambda) so the cell count per patch is
  /// the same on every row.
  bool refine = false;
  double base_lambda = 200.0;
  int min_cells = 30;
  int max_iters = 500;
  double energy_tol = 1e-10;
  double diam_window_lo = 1.5;
  double diam_window_hi = 4.0;
  double slope_tolerance = 0.25;
  double core_ratio_max = 10.0;
};

struct AsymptoticsReport {
  std::vector<SweepRow> rows;  // sorted by lambda
  LineFit energy_fit, mu_fit;
  double energy_slope_target = 0.0;  // sum kappa_i^2 / (8 pi)
  double mu_slope_target = 0.0;      // sum kappa_i^2 / (4 pi)
  double diam_ratio_min = 0.0, diam_ratio_max = 0.0;
  double core_ratio = 0.0;
  std::vector<SweepCheck> checks;

  bool passed() const;
};

int sweep_grid_size(const SweepConfig& cfg, double lambda);

/// Solves each lambda independently. A row that throws is marked failed and
/// the sweep continues.
AsymptoticsReport sweep_lambda(const SweepConfig& cfg, std::span<const double> lambdas);

}  // namespace vpatch
