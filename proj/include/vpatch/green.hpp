#pragma once

// Green function of -Laplace with zero Dirichlet data: the analytic unit-disk
// kernel (method of images) and discrete Poisson solves that realise
// psi(x) = int_D G(x, y) omega(y) dy on a grid.

#include <functional>
#include <memory>
#include <optional>
#include <string_view>

#include "vpatch/domain.hpp"

namespace vpatch {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// G(x, y) = (1/2pi) ln(1/|x-y|) - h(x, y) on the unit disk.
double green_disk(Vec2 x, Vec2 y);
/// Regular part h(x, y) = (1/2pi) ln(1 / sqrt(|x|^2 |y|^2 - 2 x.y + 1)).
double regular_part_disk(Vec2 x, Vec2 y);
/// Robin function h(x, x) = -(1/2pi) ln(1 - |x|^2).
double robin_disk(Vec2 x);
/// Average of (1/2pi) ln(1/|x - y|) over a square cell of side h centred at x.
double self_cell_log_average(double h);

enum class GreenBackend { AnalyticDiskQuadrature, FastRectangleSolve, MaskedDirectSolve };

std::string_view backend_name(GreenBackend b);

class GreenBackendImpl;

/// Inverse of the discrete Dirichlet Laplacian on a grid. Immutable after
/// construction; apply() is safe to call concurrently.
class GreenOperator {
 public:
  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  GreenBackend backend() const { return backend_; }

  /// Solves -Lap psi = omega with psi = 0 on the boundary.
  ScalarField apply(const ScalarField& omega) const;
  /// Discrete harmonic function with boundary values g on the wall links.
  ScalarField harmonic_extension(const std::function<double(Vec2)>& g) const;
  /// Applies the discrete -Laplacian (including wall closures) to u.
  ScalarField laplacian(const ScalarField& u) const;

 private:
  friend GreenOperator build_green(GridPtr, std::optional<GreenBackend>);
  GridPtr grid_;
  GreenBackend backend_ = GreenBackend::MaskedDirectSolve;
  std::shared_ptr<const GreenBackendImpl> impl_;
};

/// Rectangles default to the fast sine-transform solve, everything else to a
/// cached sparse Cholesky factorisation of the masked 5-point operator.
GreenOperator build_green(GridPtr grid, std::optional<GreenBackend> backend = std::nullopt);

struct StreamFunction {
  ScalarField psi;
  ScalarField source;
};

StreamFunction stream(const GreenOperator& op, const ScalarField& omega);
/// E = 1/2 int omega psi.
double energy(const GreenOperator& op, const ScalarField& omega);

struct VelocityField {
  ScalarField u;
  ScalarField v;
};

/// v = J grad psi = (d2 psi, -d1 psi) by central differences; wall
/// neighbours use the Dirichlet ghost value.
VelocityField velocity(const StreamFunction& psi);
VelocityField velocity(const ScalarField& psi);

/// Central-difference gradient of psi at an inside cell (walls closed with
/// the zero-Dirichlet ghost value).
Vec2 grad_at(const ScalarField& psi, int idx);

/// Largest |psi| over the boundary-adjacent cells divided by (h * max|grad psi|);
/// O(1) when psi vanishes at the wall crossing.
double boundary_consistency(const ScalarField& psi);

}  // namespace vpatch
