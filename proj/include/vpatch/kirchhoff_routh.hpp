#pragma once

// Kirchhoff-Routh function of an opposite-signed vortex pair,
//   H(x1, x2) = -2 k1 k2 G(x1, x2) + k1^2 h(x1, x1) + k2^2 h(x2, x2),
// and a certified search for its strict local minima.

#include <memory>
#include <vector>

#include "vpatch/green.hpp"

namespace vpatch {

struct KRPoint {
  Vec2 x1;
  Vec2 x2;
  double kappa1 = 1.0;
  double kappa2 = -1.0;
};

/// Throws CoincidentPoints, OutsideDomain or InvalidArgument (needs k1 > 0 > k2).
void validate(const KRPoint& p, const Domain& domain);

/// Pointwise regular part h(x, y) of the Dirichlet Green function. The disk
/// version is analytic; the grid version solves a discrete Laplace problem
/// with boundary data (1/2pi) ln(1/|z - y|) per source point y (cached) and
/// interpolates bilinearly, so the log singularity never touches the grid.
class PointGreen {
 public:
  static PointGreen disk();
  static PointGreen from_grid(GreenOperator op);

  const Domain& domain() const;
  double regular(Vec2 x, Vec2 y) const;
  double robin(Vec2 x) const { return regular(x, x); }
  double green(Vec2 x, Vec2 y) const;
  /// Smallest distance to the wall at which evaluations are trusted.
  double clearance() const;
  bool rotation_invariant() const { return domain().is_disk(); }

  class Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

double kr_value(const KRPoint& p, const PointGreen& g);

/// Independent coordinate boxes for x1 and x2.
struct SearchBox {
  Vec2 lo1, hi1, lo2, hi2;

  bool contains(const KRPoint& p) const;
};

/// Seed +- a quarter of the bounding-box diagonal, clipped to the bounding box.
SearchBox default_search_box(const KRPoint& seed, const Domain& domain);

struct KRMinimum {
  KRPoint point;
  double value = 0.0;
  double delta = 0.0;
  Ball b1, b2;
  /// min over sampled boundary points of B1 x B2 of H - H_min.
  double strictness_margin = 0.0;
  int certificate_samples = 0;
  /// Certificate restricted to the slice transverse to the rotation orbit.
  bool symmetry_reduced = false;
};

struct KRScanSample {
  Vec2 x1, x2;
  double value = 0.0;
};

struct KRSearchOptions {
  int scan_points = 9;  // per coordinate
  int certificate_samples = 256;
  double tolerance = 1e-13;
  int max_evaluations = 20000;
};

struct KRSearch {
  KRMinimum minimum;
  std::vector<KRScanSample> scan;
  int evaluations = 0;
};

/// Coarse 4-D scan of the box, Nelder-Mead refinement from the best scan
/// point, then delta halving until the strictness certificate passes.
/// Throws NoInteriorMinimum, DegenerateMinimum.
KRSearch search_local_min(const KRPoint& seed, const SearchBox& box, const PointGreen& g,
                          const KRSearchOptions& opts = {});

inline KRMinimum find_local_min(const KRPoint& seed, const SearchBox& box, const PointGreen& g,
                                const KRSearchOptions& opts = {}) {
  return search_local_min(seed, box, g, opts).minimum;
}

}  // namespace vpatch
