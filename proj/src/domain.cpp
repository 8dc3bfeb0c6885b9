#include "vpatch/domain.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace vpatch {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MaskNotSimplyConnected: return "MaskNotSimplyConnected";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoInteriorMinimum: return "NoInteriorMinimum";
    case ErrorCode::DegenerateMinimum: return "DegenerateMinimum";
    case ErrorCode::InfeasibleArea: return "InfeasibleArea";
    case ErrorCode::BallNotContained: return "BallNotContained";
    case ErrorCode::BallsOverlap: return "BallsOverlap";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SupportTouchesBallBoundary: return "SupportTouchesBallBoundary";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::CirculationMismatch: return "CirculationMismatch";
    case ErrorCode::TestFunctionInfeasible: return "TestFunctionInfeasible";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::SupportLeavesDomain: return "SupportLeavesDomain";
    case ErrorCode::Inapplicable: return "Inapplicable";
    case ErrorCode::NonDiskDomain: return "NonDiskDomain";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(Kind kind) : kind_(std::move(kind)) {
  if (auto* r = std::get_if<Rectangle>(&kind_)) {
    if (!(r->width > 0.0) || !(r->height > 0.0) || !std::isfinite(r->width) || !std::isfinite(r->height))
      throw Error(ErrorCode::InvalidArgument, "rectangle sides must be positive and finite");
  } else if (auto* b = std::get_if<MaskedBitmap>(&kind_)) {
    if (b->cols <= 0 || b->rows <= 0 || b->mask.size() != static_cast<std::size_t>(b->cols) * b->rows)
      throw Error(ErrorCode::InvalidArgument, "bitmap dimensions do not match mask size");
    validate_simply_connected(b->cols, b->rows, b->mask);
  }
}

std::string Domain::name() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, UnitDisk>) return "disk";
        else if constexpr (std::is_same_v<T, Rectangle>) return "rectangle";
        else return "bitmap";
      },
      kind_);
}

namespace {

Vec2 bitmap_extent(const MaskedBitmap& b) {
  const double longest = std::max(b.cols, b.rows);
  return {b.cols / longest, b.rows / longest};
}

}  // namespace

Vec2 Domain::origin() const { return is_disk() ? Vec2{-1.0, -1.0} : Vec2{0.0, 0.0}; }

Vec2 Domain::extent() const {
  if (is_disk()) return {2.0, 2.0};
  if (auto* r = std::get_if<Rectangle>(&kind_)) return {r->width, r->height};
  return bitmap_extent(std::get<MaskedBitmap>(kind_));
}

Vec2 Domain::center() const { return origin() + 0.5 * extent(); }

bool Domain::contains(Vec2 p) const {
  if (is_disk()) return p.x * p.x + p.y * p.y < 1.0;
  if (auto* r = std::get_if<Rectangle>(&kind_)) return p.x > 0.0 && p.y > 0.0 && p.x < r->width && p.y < r->height;
  const auto& b = std::get<MaskedBitmap>(kind_);
  const Vec2 ext = bitmap_extent(b);
  if (p.x <= 0.0 || p.y <= 0.0 || p.x >= ext.x || p.y >= ext.y) return false;
  const int c = std::min(b.cols - 1, static_cast<int>(p.x / ext.x * b.cols));
  const int r = std::min(b.rows - 1, static_cast<int>(p.y / ext.y * b.rows));
  return b.at(c, r);
}

double Domain::distance_to_boundary(Vec2 p) const {
  if (!contains(p)) return 0.0;
  if (is_disk()) return 1.0 - norm(p);
  if (auto* r = std::get_if<Rectangle>(&kind_))
    return std::min({p.x, r->width - p.x, p.y, r->height - p.y});
  const auto& b = std::get<MaskedBitmap>(kind_);
  const Vec2 ext = bitmap_extent(b);
  const double cw = ext.x / b.cols;
  double best = std::min({p.x, ext.x - p.x, p.y, ext.y - p.y});
  for (int r = 0; r < b.rows; ++r) {
    for (int c = 0; c < b.cols; ++c) {
      if (b.at(c, r)) continue;
      const double dx = std::max({c * cw - p.x, 0.0, p.x - (c + 1) * cw});
      const double dy = std::max({r * cw - p.y, 0.0, p.y - (r + 1) * cw});
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Connectivity

void validate_simply_connected(int cols, int rows, std::span<const std::uint8_t> mask) {
  const auto at = [&](int c, int r) { return mask[static_cast<std::size_t>(r) * cols + c] != 0; };
  const int total = static_cast<int>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
  if (total == 0) throw Error(ErrorCode::MaskNotSimplyConnected, "mask is empty");

  // Foreground: one 4-connected component.
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::deque<int> queue;
  const auto first = static_cast<int>(std::find_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }) - mask.begin());
  queue.push_back(first);
  seen[first] = 1;
  int reached = 0;
  constexpr int dc4[] = {1, -1, 0, 0}, dr4[] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    ++reached;
    const int c = k % cols, r = k / cols;
    for (int d = 0; d < 4; ++d) {
      const int nc = c + dc4[d], nr = r + dr4[d];
      if (nc < 0 || nr < 0 || nc >= cols || nr >= rows || !at(nc, nr)) continue;
      const int nk = nr * cols + nc;
      if (!seen[nk]) { seen[nk] = 1; queue.push_back(nk); }
    }
  }
  if (reached != total)
    throw Error(ErrorCode::MaskNotSimplyConnected,
                "mask is not a single 4-connected component (" + std::to_string(reached) + " of " +
                    std::to_string(total) + " cells reachable)");

  // Background: every outside cell must reach the frame through 8-connected
  // outside cells, otherwise it encloses a hole.
  const int pc = cols + 2, pr = rows + 2;
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(pc) * pr, 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) outside[static_cast<std::size_t>(r + 1) * pc + c + 1] = at(c, r) ? 0 : 1;
  std::vector<std::uint8_t> bseen(outside.size(), 0);
  queue.clear();
  queue.push_back(0);
  bseen[0] = 1;
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    const int c = k % pc, r = k / pc;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int nc = c + dc, nr = r + dr;
        if (nc < 0 || nr < 0 || nc >= pc || nr >= pr) continue;
        const int nk = nr * pc + nc;
        if (outside[nk] && !bseen[nk]) { bseen[nk] = 1; queue.push_back(nk); }
      }
    }
  }
  for (std::size_t k = 0; k < outside.size(); ++k)
    if (outside[k] && !bseen[k]) throw Error(ErrorCode::MaskNotSimplyConnected, "mask encloses a hole");
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(Domain domain, int nx, int ny, double h, Vec2 origin, std::vector<std::uint8_t> inside)
    : domain_(std::move(domain)), nx_(nx), ny_(ny), h_(h), origin_(origin), inside_(std::move(inside)) {
  for (int k = 0; k < static_cast<int>(inside_.size()); ++k)
    if (inside_[k]) cells_.push_back(k);
  inside_count_ = static_cast<int>(cells_.size());

  constexpr int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
  for (int k : cells_) {
    const Vec2 c = center(k);
    for (int d = 0; d < 4; ++d) {
      if (neighbor(k, d) >= 0) continue;
      WallLink w{k, d, 0.5, c + 0.5 * h_ * Vec2{double(di[d]), double(dj[d])}};
      if (domain_.is_disk()) {
        // Exact crossing of |c + t h e| = 1 along the link.
        const double along = di[d] != 0 ? c.x * di[d] : c.y * dj[d];
        const double across = di[d] != 0 ? c.y : c.x;
        const double t = (std::sqrt(std::max(0.0, 1.0 - across * across)) - along) / h_;
        w.theta = std::clamp(t, 1e-3, 1.0);
        w.point = c + w.theta * h_ * Vec2{double(di[d]), double(dj[d])};
      }
      walls_.push_back(w);
    }
  }
}

int Grid::neighbor(int idx, int dir) const {
  int i = col(idx), j = row(idx);
  switch (dir) {
    case 0: ++i; break;
    case 1: --i; break;
    case 2: ++j; break;
    default: --j; break;
  }
  return inside(i, j) ? index(i, j) : -1;
}

int Grid::cell_at(Vec2 p) const {
  const int i = static_cast<int>(std::floor((p.x - origin_.x) / h_));
  const int j = static_cast<int>(std::floor((p.y - origin_.y) / h_));
  return valid(i, j) ? index(i, j) : -1;
}

bool Grid::contains(Vec2 p) const { return domain_.contains(p); }

bool Grid::same_as(const Grid& o) const {
  return this == &o || (nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && origin_ == o.origin_ && inside_ == o.inside_);
}

GridPtr discretize(const Domain& domain, int n) {
  if (n < 1) throw Error(ErrorCode::ResolutionTooCoarse, "cell count must be positive");
  const Vec2 ext = domain.extent();
  const double h = std::max(ext.x, ext.y) / n;
  const int nx = static_cast<int>(std::lround(ext.x / h));
  const int ny = static_cast<int>(std::lround(ext.y / h));
  if (std::abs(nx * h - ext.x) > 1e-9 * ext.x || std::abs(ny * h - ext.y) > 1e-9 * ext.y)
    throw Error(ErrorCode::InvalidArgument, "domain sides are not commensurate with n = " + std::to_string(n));
  if (nx < 1 || ny < 1) throw Error(ErrorCode::ResolutionTooCoarse, "grid has an empty axis");

  const Vec2 origin = domain.origin();
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(nx) * ny, 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      inside[static_cast<std::size_t>(j) * nx + i] =
          domain.contains({origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h}) ? 1 : 0;

  const auto count = std::count(inside.begin(), inside.end(), std::uint8_t{1});
  if (count < 16)
    throw Error(ErrorCode::ResolutionTooCoarse, "only " + std::to_string(count) + " inside cells (need >= 16)");
  validate_simply_connected(nx, ny, inside);
  return std::make_shared<const Grid>(domain, nx, ny, h, origin, std::move(inside));
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {
  for (int k : grid_->inside_cells()) values_[k] = fill;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw Error(ErrorCode::GridMismatch, "value count does not match grid");
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (!grid_->inside(static_cast<int>(k))) values_[k] = 0.0;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (int k : grid_->inside_cells()) m = std::min(m, values_[k]);
  return m;
}

double ScalarField::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (int k : grid_->inside_cells()) m = std::max(m, values_[k]);
  return m;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField ScalarField::times(const ScalarField& o) const {
  require_same_grid(*this, o);
  std::vector<double> v(values_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = values_[k] * o.values_[k];
  return ScalarField(grid_, std::move(v));
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (a.empty() || b.empty() || !(a.grid_ptr() == b.grid_ptr() || a.grid().same_as(b.grid())))
    throw Error(ErrorCode::GridMismatch, "fields live on different grids");
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  for (int k : f.grid().inside_cells()) s += f[k];
  return s * f.grid().cell_area();
}

double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (int k : f.grid().inside_cells()) s += f[k] * g[k];
  return s * f.grid().cell_area();
}

double l1_distance(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (int k : f.grid().inside_cells()) s += std::abs(f[k] - g[k]);
  return s * f.grid().cell_area();
}

// ---------------------------------------------------------------------------
// Balls

bool ball_compactly_inside(const Domain& domain, const Ball& ball, double margin) {
  return ball.radius > 0.0 && domain.contains(ball.center) &&
         domain.distance_to_boundary(ball.center) > ball.radius + margin;
}

std::vector<int> ball_cells(const Grid& grid, const Ball& ball) {
  std::vector<int> out;
  const double h = grid.h();
  const Vec2 o = grid.origin();
  const int i0 = std::max(0, static_cast<int>(std::floor((ball.center.x - ball.radius - o.x) / h)));
  const int i1 = std::min(grid.nx() - 1, static_cast<int>(std::ceil((ball.center.x + ball.radius - o.x) / h)));
  const int j0 = std::max(0, static_cast<int>(std::floor((ball.center.y - ball.radius - o.y) / h)));
  const int j1 = std::min(grid.ny() - 1, static_cast<int>(std::ceil((ball.center.y + ball.radius - o.y) / h)));
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      if (grid.inside(i, j) && ball.contains(grid.center(i, j))) out.push_back(grid.index(i, j));
  return out;
}

}  // namespace vpatch
