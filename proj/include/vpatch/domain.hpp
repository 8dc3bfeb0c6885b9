#pragma once

// Domain geometry, uniform cell-centred grids, scalar fields and midpoint
// quadrature. Every other module consumes these types.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vpatch/error.hpp"

namespace vpatch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
/// Clockwise rotation through pi/2: J(v1, v2) = (v2, -v1).
inline Vec2 rotate_cw(Vec2 a) { return {a.y, -a.x}; }
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

struct UnitDisk {};

/// Axis-aligned rectangle occupying [0, width] x [0, height].
struct Rectangle {
  double width = 1.0;
  double height = 1.0;
};

/// Boolean raster, row 0 at the bottom. The raster is scaled so that its
/// longer side has unit length and its lower-left corner sits at the origin.
struct MaskedBitmap {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> mask;  // rows * cols, row-major

  bool at(int col, int row) const { return mask[static_cast<std::size_t>(row) * cols + col] != 0; }
};

class Domain {
 public:
  using Kind = std::variant<UnitDisk, Rectangle, MaskedBitmap>;

  Domain() : kind_(UnitDisk{}) {}
  explicit Domain(Kind kind);

  static Domain unit_disk() { return Domain(UnitDisk{}); }
  static Domain rectangle(double width, double height) { return Domain(Rectangle{width, height}); }
  static Domain bitmap(MaskedBitmap mask) { return Domain(std::move(mask)); }

  const Kind& kind() const { return kind_; }
  bool is_disk() const { return std::holds_alternative<UnitDisk>(kind_); }
  bool is_rectangle() const { return std::holds_alternative<Rectangle>(kind_); }
  bool is_bitmap() const { return std::holds_alternative<MaskedBitmap>(kind_); }
  std::string name() const;

  /// Bounding box lower-left corner and extent.
  Vec2 origin() const;
  Vec2 extent() const;

  /// Exact membership for analytic domains; raster lookup for bitmaps.
  bool contains(Vec2 p) const;
  /// Distance from an interior point to the boundary (raster-resolution for bitmaps).
  double distance_to_boundary(Vec2 p) const;
  Vec2 center() const;

 private:
  Kind kind_;
};

/// Dirichlet wall link: an inside cell whose neighbour in direction `dir`
/// (0:+x 1:-x 2:+y 3:-y) lies outside. The boundary crosses the link at
/// fraction `theta` of the cell spacing, at point `point`.
struct WallLink {
  int cell = 0;
  int dir = 0;
  double theta = 0.5;
  Vec2 point;
};

class Grid {
 public:
  Grid(Domain domain, int nx, int ny, double h, Vec2 origin, std::vector<std::uint8_t> inside);

  const Domain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  double cell_area() const { return h_ * h_; }
  Vec2 origin() const { return origin_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  int inside_count() const { return inside_count_; }

  int index(int i, int j) const { return j * nx_ + i; }
  int col(int idx) const { return idx % nx_; }
  int row(int idx) const { return idx / nx_; }
  bool valid(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  bool inside(int idx) const { return inside_[idx] != 0; }
  bool inside(int i, int j) const { return valid(i, j) && inside_[index(i, j)] != 0; }
  std::span<const std::uint8_t> mask() const { return inside_; }

  Vec2 center(int idx) const { return center(col(idx), row(idx)); }
  Vec2 center(int i, int j) const { return {origin_.x + (i + 0.5) * h_, origin_.y + (j + 0.5) * h_}; }
  /// Cell containing p, or -1 when p is outside the bounding box.
  int cell_at(Vec2 p) const;
  bool contains(Vec2 p) const;

  /// Neighbour of cell idx in direction dir (0:+x 1:-x 2:+y 3:-y) or -1.
  int neighbor(int idx, int dir) const;

  const std::vector<int>& inside_cells() const { return cells_; }
  const std::vector<WallLink>& wall_links() const { return walls_; }

  bool same_as(const Grid& other) const;

 private:
  Domain domain_;
  int nx_, ny_;
  double h_;
  Vec2 origin_;
  std::vector<std::uint8_t> inside_;
  std::vector<int> cells_;
  std::vector<WallLink> walls_;
  int inside_count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// n is the cell count along the longer side of the bounding box.
GridPtr discretize(const Domain& domain, int n);

/// Validates that a raster is one 4-connected component with no holes.
void validate_simply_connected(int cols, int rows, std::span<const std::uint8_t> mask);

/// Cell-centred field over the full bounding grid; outside cells always hold 0.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double fill = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return !grid_; }

  double operator[](std::size_t idx) const { return values_[idx]; }
  /// Writes to outside cells are ignored.
  void set(int idx, double v) {
    if (grid_->inside(idx)) values_[idx] = v;
  }
  double at(int i, int j) const { return grid_->valid(i, j) ? values_[grid_->index(i, j)] : 0.0; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  double max_abs() const;
  double min_value() const;
  double max_value() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  /// Pointwise product.
  ScalarField times(const ScalarField& o) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Builds a field by evaluating f at every inside cell centre.
template <typename F>
ScalarField sample(const GridPtr& grid, F&& f) {
  std::vector<double> v(grid->size(), 0.0);
  for (int idx : grid->inside_cells()) v[idx] = f(grid->center(idx));
  return ScalarField(grid, std::move(v));
}

void require_same_grid(const ScalarField& a, const ScalarField& b);

/// Midpoint quadrature: sum of f * h^2 over inside cells.
double integrate(const ScalarField& f);
/// Inner product <f, g> with the same quadrature.
double inner(const ScalarField& f, const ScalarField& g);
double l1_distance(const ScalarField& f, const ScalarField& g);

struct Ball {
  Vec2 center;
  double radius = 0.0;

  bool contains(Vec2 p) const { return distance(p, center) < radius; }
};

/// Closure of the ball lies in D with at least `margin` to spare.
bool ball_compactly_inside(const Domain& domain, const Ball& ball, double margin);
/// Inside cells whose centres lie in the open ball, in increasing index order.
std::vector<int> ball_cells(const Grid& grid, const Ball& ball);

}  // namespace vpatch
