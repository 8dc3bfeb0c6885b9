#pragma once

// Energy maximisation over the two-component patch class K_lambda by
// conditional-gradient iterations whose subproblem is the bathtub selection,
// plus steadiness diagnostics for the result.

#include <optional>
#include <vector>

#include "vpatch/green.hpp"
#include "vpatch/kirchhoff_routh.hpp"

namespace vpatch {

/// Circulations and the isolating balls B1, B2 (centres are the KR minimiser).
struct VortexSpec {
  double kappa1 = 1.0;
  double kappa2 = -1.0;
  Ball b1, b2;
};

VortexSpec vortex_from(const KRMinimum& m);

/// Cells carried by one patch: N = round(|kappa| / (lambda h^2)).
int patch_cell_count(double kappa, double lambda, double h);

struct Bathtub {
  ScalarField field;         // lambda * sign on the selected cells
  std::vector<int> selected;  // increasing index order
  double mu = 0.0;           // sign * psi at the highest-ranked excluded cell
  int ties = 0;              // cells whose sign * psi equals mu (to rounding)
  bool degenerate = false;   // the cut passes through a tie
};

/// Top N cells of sign(kappa) * psi inside the ball, ties broken by cell index.
/// Throws InfeasibleArea when N exceeds the cells in the ball.
Bathtub bathtub_project(const ScalarField& psi, const Ball& ball, double kappa, double lambda);

/// Discrete two-ball test function: the N_i cells nearest each centre.
/// With `strict`, throws TestFunctionInfeasible when the continuous
/// eps-ball does not fit inside B_i.
ScalarField test_function(const GridPtr& grid, const VortexSpec& spec, double lambda, bool strict = true);

struct SolverConfig {
  VortexSpec vortex;
  double lambda = 200.0;
  int max_iters = 500;
  double energy_tol = 1e-10;
  /// Custom starting field; defaults to the two-ball test function.
  std::optional<ScalarField> initial;
};

struct SteadyPatch {
  VortexSpec vortex;
  double lambda = 0.0;
  ScalarField omega, omega1, omega2;
  std::vector<int> cells1, cells2;
  double mu1 = 0.0, mu2 = 0.0;
  StreamFunction psi;
  double energy = 0.0;
  std::vector<double> energy_ledger;  // E of every iterate, starting with the initial field
  int iterations = 0;
  bool converged = false;
  bool cycled = false;  // stopped on a 2-cycle between equal-energy sets
  int tie_cells = 0;

  double circulation_error() const;
};

/// Throws InfeasibleArea, BallsOverlap, BallNotContained, NotConverged,
/// SupportTouchesBallBoundary.
SteadyPatch solve_steady(const SolverConfig& cfg, const GreenOperator& green);

/// Rebuilds the diagnostics of a patch from its two component fields.
SteadyPatch patch_from_fields(const VortexSpec& spec, double lambda, const ScalarField& omega1,
                              const ScalarField& omega2, const GreenOperator& green);

/// Whether any selected cell has a 4-neighbour outside the ball (or the domain).
bool touches_ball_boundary(const Grid& grid, const std::vector<int>& cells, const Ball& ball);

enum class BumpShape { Tensor, Radial };

struct BumpTest {
  Vec2 center;
  double half_width = 0.1;
  BumpShape shape = BumpShape::Tensor;

  double value(Vec2 p) const;
  Vec2 gradient(Vec2 p) const;
  double max_gradient() const;
};

/// |int omega d(xi, psi)| / (lambda |grad xi|_inf |grad psi|_inf |supp omega|).
double weak_steadiness(const ScalarField& omega, const ScalarField& psi, const BumpTest& xi, double lambda);

/// Bump family used by steadiness_residual: centres on a 3x3 lattice of
/// half-diameter spacing around each patch, full widths 2, 4 and 8 diameters.
std::vector<BumpTest> residual_tests(const SteadyPatch& patch, int count);

/// Maximum of weak_steadiness over residual_tests(patch, test_count).
double steadiness_residual(const SteadyPatch& patch, int test_count = 54);

struct BoundaryGradient {
  bool skipped = false;  // no patch
  double min = 0.0;
  double max = 0.0;
  int links = 0;
};

/// One-sided outward derivatives of sign * psi across every patch edge.
BoundaryGradient boundary_gradient_check(const SteadyPatch& patch);

/// Maximum distance between centres of support cells.
double patch_diameter(const ScalarField& omega_i);

}  // namespace vpatch
