#include "vpatch/green.hpp"

#include <fftw3.h>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

namespace vpatch {

// ---------------------------------------------------------------------------
// Analytic disk kernel

double regular_part_disk(Vec2 x, Vec2 y) {
  const double q = dot(x, x) * dot(y, y) - 2.0 * dot(x, y) + 1.0;
  return -std::log(q) / (2.0 * kTwoPi);
}

double green_disk(Vec2 x, Vec2 y) {
  const double r = distance(x, y);
  if (r < 1e-12) throw Error(ErrorCode::CoincidentPoints, "green_disk needs x != y");
  return -std::log(r) / kTwoPi - regular_part_disk(x, y);
}

double robin_disk(Vec2 x) {
  const double r2 = dot(x, x);
  if (r2 >= 1.0) throw Error(ErrorCode::OutsideDomain, "robin_disk needs |x| < 1");
  return -std::log1p(-r2) / kTwoPi;
}

double self_cell_log_average(double h) {
  // int over [-h/2,h/2]^2 of ln(1/r) = h^2 (-ln h + ln(2)/2 + 3/2 - pi/4)
  constexpr double kPi = kTwoPi / 2.0;
  return (-std::log(h) + 0.5 * std::log(2.0) + 1.5 - 0.25 * kPi) / kTwoPi;
}

std::string_view backend_name(GreenBackend b) {
  switch (b) {
    case GreenBackend::AnalyticDiskQuadrature: return "AnalyticDiskQuadrature";
    case GreenBackend::FastRectangleSolve: return "FastRectangleSolve";
    case GreenBackend::MaskedDirectSolve: return "MaskedDirectSolve";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Backends. All of them solve L x = b on the full bounding grid, where L is
// h^2 times the discrete -Laplacian with wall closures.

class GreenBackendImpl {
 public:
  virtual ~GreenBackendImpl() = default;
  virtual std::vector<double> solve_scaled(const std::vector<double>& b) const = 0;
};

namespace {

constexpr int kDi[] = {1, -1, 0, 0};
constexpr int kDj[] = {0, 0, 1, -1};

/// Diagonal of L for each inside cell: inside neighbours count 1, walls 1/theta.
std::vector<double> operator_diagonal(const Grid& g) {
  std::vector<double> diag(g.size(), 0.0);
  for (int k : g.inside_cells())
    for (int d = 0; d < 4; ++d)
      if (g.neighbor(k, d) >= 0) diag[k] += 1.0;
  for (const WallLink& w : g.wall_links()) diag[w.cell] += 1.0 / w.theta;
  return diag;
}

std::vector<double> apply_scaled(const Grid& g, const std::vector<double>& diag, const std::vector<double>& x) {
  std::vector<double> y(g.size(), 0.0);
  for (int k : g.inside_cells()) {
    double s = diag[k] * x[k];
    for (int d = 0; d < 4; ++d) {
      const int nb = g.neighbor(k, d);
      if (nb >= 0) s -= x[nb];
    }
    y[k] = s;
  }
  return y;
}

class MaskedDirect final : public GreenBackendImpl {
 public:
  explicit MaskedDirect(GridPtr grid) : grid_(std::move(grid)), diag_(operator_diagonal(*grid_)) {
    const Grid& g = *grid_;
    unknown_.assign(g.size(), -1);
    const auto& cells = g.inside_cells();
    for (int u = 0; u < static_cast<int>(cells.size()); ++u) unknown_[cells[u]] = u;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(cells.size() * 5);
    for (int k : cells) {
      const int row = unknown_[k];
      trip.emplace_back(row, row, diag_[k]);
      for (int d = 0; d < 4; ++d) {
        const int nb = g.neighbor(k, d);
        if (nb >= 0) trip.emplace_back(row, unknown_[nb], -1.0);
      }
    }
    matrix_.resize(static_cast<int>(cells.size()), static_cast<int>(cells.size()));
    matrix_.setFromTriplets(trip.begin(), trip.end());
    factor_.compute(matrix_);
    if (factor_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "Cholesky factorisation of the masked Laplacian failed");
  }

  std::vector<double> solve_scaled(const std::vector<double>& b) const override {
    const Grid& g = *grid_;
    const auto& cells = g.inside_cells();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t u = 0; u < cells.size(); ++u) rhs[static_cast<Eigen::Index>(u)] = b[cells[u]];
    Eigen::VectorXd x = factor_.solve(rhs);
    const double target = 1e-10 * std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd r = rhs - matrix_ * x;
      if (r.lpNorm<Eigen::Infinity>() <= target) break;
      x += factor_.solve(r);
    }
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t u = 0; u < cells.size(); ++u) out[cells[u]] = x[static_cast<Eigen::Index>(u)];
    return out;
  }

 private:
  GridPtr grid_;
  std::vector<double> diag_;
  std::vector<int> unknown_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
};

/// Cell-centred Dirichlet problem on a full rectangle: the half-sample sine
/// transform (DST-II / DST-III pair) diagonalises L exactly.
class FastRectangle final : public GreenBackendImpl {
 public:
  explicit FastRectangle(GridPtr grid) : grid_(std::move(grid)) {
    const Grid& g = *grid_;
    if (g.inside_count() != static_cast<int>(g.size()))
      throw Error(ErrorCode::InvalidArgument, "fast rectangle solve needs a full rectangular mask");
    const int nx = g.nx(), ny = g.ny();
    eig_.resize(g.size());
    for (int l = 0; l < ny; ++l)
      for (int k = 0; k < nx; ++k)
        eig_[static_cast<std::size_t>(l) * nx + k] =
            (2.0 - 2.0 * std::cos(M_PI * (k + 1) / nx)) + (2.0 - 2.0 * std::cos(M_PI * (l + 1) / ny));
    std::lock_guard lock(plan_mutex());
    double* buf = fftw_alloc_real(g.size());
    forward_ = fftw_plan_r2r_2d(ny, nx, buf, buf, FFTW_RODFT10, FFTW_RODFT10, FFTW_ESTIMATE);
    backward_ = fftw_plan_r2r_2d(ny, nx, buf, buf, FFTW_RODFT01, FFTW_RODFT01, FFTW_ESTIMATE);
    fftw_free(buf);
  }

  ~FastRectangle() override {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  FastRectangle(const FastRectangle&) = delete;
  FastRectangle& operator=(const FastRectangle&) = delete;

  std::vector<double> solve_scaled(const std::vector<double>& b) const override {
    const Grid& g = *grid_;
    const std::size_t n = g.size();
    double* buf = fftw_alloc_real(n);
    std::copy(b.begin(), b.end(), buf);
    fftw_execute_r2r(forward_, buf, buf);
    const double norm = 4.0 * g.nx() * g.ny();
    for (std::size_t k = 0; k < n; ++k) buf[k] /= eig_[k] * norm;
    fftw_execute_r2r(backward_, buf, buf);
    std::vector<double> out(buf, buf + n);
    fftw_free(buf);
    return out;
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  GridPtr grid_;
  std::vector<double> eig_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Direct midpoint quadrature of the analytic disk kernel; the diagonal uses
/// the exact cell average of the logarithm. O(N * support) per apply.
class AnalyticDisk final : public GreenBackendImpl {
 public:
  explicit AnalyticDisk(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_->domain().is_disk())
      throw Error(ErrorCode::NonDiskDomain, "analytic quadrature backend needs the unit disk");
  }

  std::vector<double> solve_scaled(const std::vector<double>& b) const override {
    // b = h^2 omega already carries the quadrature weight.
    const Grid& g = *grid_;
    const double self = self_cell_log_average(g.h());
    std::vector<int> support;
    for (int k : g.inside_cells())
      if (b[k] != 0.0) support.push_back(k);
    std::vector<double> out(g.size(), 0.0);
    for (int i : g.inside_cells()) {
      const Vec2 x = g.center(i);
      double s = 0.0;
      for (int j : support) {
        s += b[j] * (i == j ? self - robin_disk(x) : green_disk(x, g.center(j)));
      }
      out[i] = s;
    }
    return out;
  }

 private:
  GridPtr grid_;
};

}  // namespace

GreenOperator build_green(GridPtr grid, std::optional<GreenBackend> backend) {
  GreenOperator op;
  const bool full_rect = grid->domain().is_rectangle() && grid->inside_count() == static_cast<int>(grid->size());
  op.backend_ = backend.value_or(full_rect ? GreenBackend::FastRectangleSolve : GreenBackend::MaskedDirectSolve);
  switch (op.backend_) {
    case GreenBackend::FastRectangleSolve: op.impl_ = std::make_shared<FastRectangle>(grid); break;
    case GreenBackend::MaskedDirectSolve: op.impl_ = std::make_shared<MaskedDirect>(grid); break;
    case GreenBackend::AnalyticDiskQuadrature: op.impl_ = std::make_shared<AnalyticDisk>(grid); break;
  }
  op.grid_ = std::move(grid);
  return op;
}

ScalarField GreenOperator::apply(const ScalarField& omega) const {
  if (omega.empty() || !(omega.grid_ptr() == grid_ || omega.grid().same_as(*grid_)))
    throw Error(ErrorCode::GridMismatch, "omega is not on the operator grid");
  const double h2 = grid_->cell_area();
  std::vector<double> b(omega.values().begin(), omega.values().end());
  for (double& v : b) v *= h2;
  return ScalarField(grid_, impl_->solve_scaled(b));
}

ScalarField GreenOperator::harmonic_extension(const std::function<double(Vec2)>& g) const {
  if (backend_ == GreenBackend::AnalyticDiskQuadrature)
    throw Error(ErrorCode::InvalidArgument, "harmonic extension needs a discrete backend");
  std::vector<double> b(grid_->size(), 0.0);
  for (const WallLink& w : grid_->wall_links()) b[w.cell] += g(w.point) / w.theta;
  return ScalarField(grid_, impl_->solve_scaled(b));
}

ScalarField GreenOperator::laplacian(const ScalarField& u) const {
  const auto diag = operator_diagonal(*grid_);
  auto y = apply_scaled(*grid_, diag, std::vector<double>(u.values().begin(), u.values().end()));
  const double inv_h2 = 1.0 / grid_->cell_area();
  for (double& v : y) v *= inv_h2;
  return ScalarField(grid_, std::move(y));
}

StreamFunction stream(const GreenOperator& op, const ScalarField& omega) {
  return StreamFunction{op.apply(omega), omega};
}

double energy(const GreenOperator& op, const ScalarField& omega) {
  return 0.5 * inner(omega, op.apply(omega));
}

// ---------------------------------------------------------------------------
// Velocity

namespace {

/// Value of psi across link (k, d): the inside neighbour, or the ghost value
/// that places psi = 0 at the wall crossing.
double across(const ScalarField& psi, int k, int d, const std::vector<double>& theta) {
  const Grid& g = psi.grid();
  const int nb = g.neighbor(k, d);
  if (nb >= 0) return psi[nb];
  const double t = theta[static_cast<std::size_t>(k) * 4 + d];
  return -psi[k] * (1.0 - t) / t;
}

std::vector<double> link_theta(const Grid& g) {
  std::vector<double> theta(g.size() * 4, 1.0);
  for (const WallLink& w : g.wall_links()) theta[static_cast<std::size_t>(w.cell) * 4 + w.dir] = w.theta;
  return theta;
}

}  // namespace

Vec2 grad_at(const ScalarField& psi, int idx) {
  const Grid& g = psi.grid();
  bool wall = false;
  for (int d = 0; d < 4; ++d) wall = wall || g.neighbor(idx, d) < 0;
  const double inv2h = 0.5 / g.h();
  if (!wall) {
    return {(psi[g.neighbor(idx, 0)] - psi[g.neighbor(idx, 1)]) * inv2h,
            (psi[g.neighbor(idx, 2)] - psi[g.neighbor(idx, 3)]) * inv2h};
  }
  std::array<double, 4> t{1.0, 1.0, 1.0, 1.0};
  for (const WallLink& w : g.wall_links())
    if (w.cell == idx) t[w.dir] = w.theta;
  const auto val = [&](int d) {
    const int nb = g.neighbor(idx, d);
    return nb >= 0 ? psi[nb] : -psi[idx] * (1.0 - t[d]) / t[d];
  };
  return {(val(0) - val(1)) * inv2h, (val(2) - val(3)) * inv2h};
}

VelocityField velocity(const ScalarField& psi) {
  const Grid& g = psi.grid();
  const auto theta = link_theta(g);
  std::vector<double> u(g.size(), 0.0), v(g.size(), 0.0);
  const double inv2h = 0.5 / g.h();
  for (int k : g.inside_cells()) {
    const double dx = (across(psi, k, 0, theta) - across(psi, k, 1, theta)) * inv2h;
    const double dy = (across(psi, k, 2, theta) - across(psi, k, 3, theta)) * inv2h;
    u[k] = dy;
    v[k] = -dx;
  }
  return {ScalarField(psi.grid_ptr(), std::move(u)), ScalarField(psi.grid_ptr(), std::move(v))};
}

VelocityField velocity(const StreamFunction& psi) { return velocity(psi.psi); }

double boundary_consistency(const ScalarField& psi) {
  const Grid& g = psi.grid();
  const VelocityField vel = velocity(psi);
  double gmax = 0.0;
  for (int k : g.inside_cells()) gmax = std::max(gmax, std::hypot(vel.u[k], vel.v[k]));
  double worst = 0.0;
  for (const WallLink& w : g.wall_links()) worst = std::max(worst, std::abs(psi[w.cell]));
  return gmax > 0.0 ? worst / (g.h() * gmax) : 0.0;
}

}  // namespace vpatch
