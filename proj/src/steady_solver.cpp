#include "vpatch/steady_solver.hpp"

#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_point.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <cmath>
#include <numeric>

namespace vpatch {

VortexSpec vortex_from(const KRMinimum& m) { return {m.point.kappa1, m.point.kappa2, m.b1, m.b2}; }

int patch_cell_count(double kappa, double lambda, double h) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  return static_cast<int>(std::lround(std::abs(kappa) / (lambda * h * h)));
}

namespace {

double sign_of(double kappa) { return kappa > 0.0 ? 1.0 : -1.0; }

/// Ranks `cells` by decreasing score, ties by increasing index.
void rank(std::vector<int>& cells, const std::vector<double>& score) {
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return cells[a] < cells[b];
  });
  std::vector<int> out(cells.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[k] = cells[order[k]];
  cells = std::move(out);
}

/// Top-n cells of the ball by score; remaining cells follow in rank order.
std::vector<int> ranked_ball(const Grid& g, const Ball& ball, const std::function<double(int)>& score) {
  std::vector<int> cells = ball_cells(g, ball);
  std::vector<double> s(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) s[k] = score(cells[k]);
  rank(cells, s);
  return cells;
}

int feasible_count(const Grid& g, const Ball& ball, double kappa, double lambda) {
  const int n = patch_cell_count(kappa, lambda, g.h());
  if (n < 1) throw Error(ErrorCode::ResolutionTooCoarse, "patch is smaller than one cell");
  const auto available = ball_cells(g, ball).size();
  if (static_cast<std::size_t>(n) > available)
    throw Error(ErrorCode::InfeasibleArea, "patch needs " + std::to_string(n) + " cells but the ball holds " +
                                               std::to_string(available));
  return n;
}

ScalarField indicator(const GridPtr& g, const std::vector<int>& cells, double value) {
  std::vector<double> v(g->size(), 0.0);
  for (int k : cells) v[k] = value;
  return ScalarField(g, std::move(v));
}

void check_balls(const Domain& d, const VortexSpec& s) {
  if (distance(s.b1.center, s.b2.center) <= s.b1.radius + s.b2.radius)
    throw Error(ErrorCode::BallsOverlap, "B1 and B2 closures intersect");
  if (!ball_compactly_inside(d, s.b1, 0.0) || !ball_compactly_inside(d, s.b2, 0.0))
    throw Error(ErrorCode::BallNotContained, "an isolating ball is not compactly inside the domain");
  if (!(s.kappa1 > 0.0) || !(s.kappa2 < 0.0)) throw Error(ErrorCode::InvalidArgument, "need kappa1 > 0 > kappa2");
}

}  // namespace

Bathtub bathtub_project(const ScalarField& psi, const Ball& ball, double kappa, double lambda) {
  const Grid& g = psi.grid();
  const int n = feasible_count(g, ball, kappa, lambda);
  const double sgn = sign_of(kappa);
  const auto ranked = ranked_ball(g, ball, [&](int k) { return sgn * psi[k]; });

  Bathtub out;
  out.selected.assign(ranked.begin(), ranked.begin() + n);
  std::sort(out.selected.begin(), out.selected.end());
  out.field = indicator(psi.grid_ptr(), out.selected, sgn * lambda);
  const bool has_excluded = static_cast<std::size_t>(n) < ranked.size();
  out.mu = sgn * psi[has_excluded ? ranked[n] : ranked[n - 1]];
  const double tol = 1e-12 * std::max(psi.max_abs(), 1e-300);
  for (int k : ranked) out.ties += std::abs(sgn * psi[k] - out.mu) <= tol;
  out.degenerate = has_excluded && std::abs(sgn * psi[ranked[n - 1]] - out.mu) <= tol;
  return out;
}

ScalarField test_function(const GridPtr& grid, const VortexSpec& spec, double lambda, bool strict) {
  ScalarField out(grid, 0.0);
  for (int i = 0; i < 2; ++i) {
    const Ball& b = i == 0 ? spec.b1 : spec.b2;
    const double kappa = i == 0 ? spec.kappa1 : spec.kappa2;
    if (strict) {
      const double eps = std::sqrt(std::abs(kappa) / (lambda * std::acos(-1.0)));
      if (eps >= b.radius)
        throw Error(ErrorCode::TestFunctionInfeasible, "eps-ball of radius " + std::to_string(eps) +
                                                           " does not fit in B" + std::to_string(i + 1));
    }
    const int n = feasible_count(*grid, b, kappa, lambda);
    const auto ranked = ranked_ball(*grid, b, [&](int k) { return -distance(grid->center(k), b.center); });
    const std::vector<int> cells(ranked.begin(), ranked.begin() + n);
    out += indicator(grid, cells, sign_of(kappa) * lambda);
  }
  return out;
}

double SteadyPatch::circulation_error() const {
  return std::max(std::abs(integrate(omega1) - vortex.kappa1), std::abs(integrate(omega2) - vortex.kappa2));
}

bool touches_ball_boundary(const Grid& grid, const std::vector<int>& cells, const Ball& ball) {
  for (int k : cells)
    for (int d = 0; d < 4; ++d) {
      const int nb = grid.neighbor(k, d);
      if (nb < 0 || !ball.contains(grid.center(nb))) return true;
    }
  return false;
}

namespace {

std::vector<int> support_of(const ScalarField& f) {
  std::vector<int> s;
  for (int k : f.grid().inside_cells())
    if (f[k] != 0.0) s.push_back(k);
  return s;
}

}  // namespace

SteadyPatch patch_from_fields(const VortexSpec& spec, double lambda, const ScalarField& omega1,
                              const ScalarField& omega2, const GreenOperator& green) {
  SteadyPatch p;
  p.vortex = spec;
  p.lambda = lambda;
  p.omega1 = omega1;
  p.omega2 = omega2;
  p.omega = omega1 + omega2;
  p.cells1 = support_of(omega1);
  p.cells2 = support_of(omega2);
  p.psi = stream(green, p.omega);
  p.energy = 0.5 * inner(p.omega, p.psi.psi);
  // Thresholds as the bathtub defines them for this stream function.
  const Bathtub t1 = bathtub_project(p.psi.psi, spec.b1, spec.kappa1, lambda);
  const Bathtub t2 = bathtub_project(p.psi.psi, spec.b2, spec.kappa2, lambda);
  p.mu1 = t1.mu;
  p.mu2 = t2.mu;
  p.tie_cells = t1.ties + t2.ties;
  return p;
}

SteadyPatch solve_steady(const SolverConfig& cfg, const GreenOperator& green) {
  const GridPtr& grid = green.grid_ptr();
  const VortexSpec& spec = cfg.vortex;
  check_balls(grid->domain(), spec);
  feasible_count(*grid, spec.b1, spec.kappa1, cfg.lambda);
  feasible_count(*grid, spec.b2, spec.kappa2, cfg.lambda);

  ScalarField omega = cfg.initial ? *cfg.initial : test_function(grid, spec, cfg.lambda, false);
  require_same_grid(omega, ScalarField(grid));

  SteadyPatch p;
  p.vortex = spec;
  p.lambda = cfg.lambda;
  StreamFunction s = stream(green, omega);
  double e = 0.5 * inner(omega, s.psi);
  p.energy_ledger.push_back(e);

  ScalarField previous;  // iterate before `omega`, for 2-cycle detection
  Bathtub t1, t2;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    t1 = bathtub_project(s.psi, spec.b1, spec.kappa1, cfg.lambda);
    t2 = bathtub_project(s.psi, spec.b2, spec.kappa2, cfg.lambda);
    ScalarField next = t1.field + t2.field;
    p.iterations = it;
    const bool repeat = l1_distance(next, omega) == 0.0;
    const bool cycle = !repeat && !previous.empty() && l1_distance(next, previous) == 0.0;
    if (repeat || cycle) {
      p.converged = true;
      p.cycled = cycle;
      // On a 2-cycle both members carry the same energy; keep the current one so
      // the ledger stays monotone. Its own bathtub (t1, t2) defines mu.
      break;
    }
    StreamFunction next_s = stream(green, next);
    const double next_e = 0.5 * inner(next, next_s.psi);
    p.energy_ledger.push_back(next_e);
    previous = std::move(omega);
    omega = std::move(next);
    s = std::move(next_s);
    const bool stalled = std::abs(next_e - e) <= cfg.energy_tol * std::abs(e);
    e = next_e;
    if (stalled) {
      t1 = bathtub_project(s.psi, spec.b1, spec.kappa1, cfg.lambda);
      t2 = bathtub_project(s.psi, spec.b2, spec.kappa2, cfg.lambda);
      p.converged = true;
      break;
    }
  }
  if (!p.converged)
    throw Error(ErrorCode::NotConverged, "no fixed point after " + std::to_string(cfg.max_iters) + " iterations");

  const double s1 = sign_of(spec.kappa1), s2 = sign_of(spec.kappa2);
  std::vector<double> w1(grid->size(), 0.0), w2(grid->size(), 0.0);
  for (int k : grid->inside_cells()) {
    if (omega[k] * s1 > 0.0 && spec.b1.contains(grid->center(k))) w1[k] = omega[k];
    if (omega[k] * s2 > 0.0 && spec.b2.contains(grid->center(k))) w2[k] = omega[k];
  }
  p.omega = omega;
  p.omega1 = ScalarField(grid, std::move(w1));
  p.omega2 = ScalarField(grid, std::move(w2));
  p.cells1 = support_of(p.omega1);
  p.cells2 = support_of(p.omega2);
  p.psi = std::move(s);
  p.energy = e;
  p.mu1 = t1.mu;
  p.mu2 = t2.mu;
  p.tie_cells = t1.ties + t2.ties;

  if (touches_ball_boundary(*grid, p.cells1, spec.b1) || touches_ball_boundary(*grid, p.cells2, spec.b2))
    throw Error(ErrorCode::SupportTouchesBallBoundary,
                "patch support reaches the edge of its isolating ball; raise lambda or enlarge delta");
  return p;
}

// ---------------------------------------------------------------------------
// Steadiness diagnostics

namespace {

// b(s) = exp(-1 / (1 - s^2)) on |s| < 1 and its derivative.
double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }
double bump_prime(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return -2.0 * s / (q * q) * std::exp(-1.0 / q);
}
// max |b'| on (-1, 1), by sampling.
double bump_prime_max() {
  static const double m = [] {
    double best = 0.0;
    for (int k = 1; k < 20000; ++k) best = std::max(best, std::abs(bump_prime(k / 20000.0)));
    return best;
  }();
  return m;
}

}  // namespace

double BumpTest::value(Vec2 p) const {
  const Vec2 q = (1.0 / half_width) * (p - center);
  if (shape == BumpShape::Radial) return bump(norm(q));
  return bump(q.x) * bump(q.y);
}

Vec2 BumpTest::gradient(Vec2 p) const {
  const Vec2 q = (1.0 / half_width) * (p - center);
  if (shape == BumpShape::Radial) {
    const double r = norm(q);
    if (r == 0.0) return {};
    return (bump_prime(r) / (half_width * r)) * q;
  }
  return {bump_prime(q.x) * bump(q.y) / half_width, bump(q.x) * bump_prime(q.y) / half_width};
}

double BumpTest::max_gradient() const {
  // Upper bound; exact for the radial profile, within sqrt(2) for the tensor one.
  const double b0 = bump(0.0);
  return (shape == BumpShape::Radial ? 1.0 : std::sqrt(2.0) * b0) * bump_prime_max() / half_width;
}

double weak_steadiness(const ScalarField& omega, const ScalarField& psi, const BumpTest& xi, double lambda) {
  require_same_grid(omega, psi);
  const Grid& g = omega.grid();
  double integral = 0.0, gpsi = 0.0;
  int support = 0;
  for (int k : g.inside_cells()) {
    const Vec2 gp = grad_at(psi, k);
    gpsi = std::max(gpsi, norm(gp));
    if (omega[k] == 0.0) continue;
    ++support;
    const Vec2 gx = xi.gradient(g.center(k));
    integral += omega[k] * (gx.x * gp.y - gx.y * gp.x);
  }
  if (support == 0 || gpsi == 0.0) return 0.0;
  integral *= g.cell_area();
  return std::abs(integral) / (lambda * xi.max_gradient() * gpsi * support * g.cell_area());
}

double patch_diameter(const ScalarField& omega_i) {
  const Grid& g = omega_i.grid();
  std::vector<Vec2> pts;
  for (int k : g.inside_cells())
    if (omega_i[k] != 0.0) pts.push_back(g.center(k));
  if (pts.empty()) throw Error(ErrorCode::EmptySupport, "patch has no support");
  if (pts.size() > 2000) {
    namespace bg = boost::geometry;
    using P = bg::model::d2::point_xy<double>;
    bg::model::multi_point<P> mp;
    for (Vec2 p : pts) mp.emplace_back(p.x, p.y);
    bg::model::polygon<P> hull;
    bg::convex_hull(mp, hull);
    pts.clear();
    for (const P& p : hull.outer()) pts.push_back({p.x(), p.y()});
  }
  double d2 = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const Vec2 d = pts[a] - pts[b];
      d2 = std::max(d2, dot(d, d));
    }
  return std::sqrt(d2);
}

namespace {

Vec2 support_centroid(const ScalarField& f) {
  const Grid& g = f.grid();
  Vec2 c;
  double w = 0.0;
  for (int k : g.inside_cells())
    if (f[k] != 0.0) {
      c += std::abs(f[k]) * g.center(k);
      w += std::abs(f[k]);
    }
  return (1.0 / w) * c;
}

}  // namespace

std::vector<BumpTest> residual_tests(const SteadyPatch& patch, int count) {
  std::vector<BumpTest> tests;
  const ScalarField* comps[] = {&patch.omega1, &patch.omega2};
  for (double widths : {2.0, 4.0, 8.0})
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox)
        for (const ScalarField* c : comps) {
          if (static_cast<int>(tests.size()) >= count) return tests;
          const double d = std::max(patch_diameter(*c), c->grid().h());
          tests.push_back({support_centroid(*c) + Vec2{0.5 * d * ox, 0.5 * d * oy}, 0.5 * widths * d});
        }
  // Beyond the lattice: cycle through it again with the radial profile.
  for (std::size_t k = 0; static_cast<int>(tests.size()) < count; ++k) {
    BumpTest t = tests[k];
    t.shape = BumpShape::Radial;
    tests.push_back(t);
  }
  return tests;
}

double steadiness_residual(const SteadyPatch& patch, int test_count) {
  double worst = 0.0;
  for (const BumpTest& t : residual_tests(patch, test_count))
    worst = std::max(worst, weak_steadiness(patch.omega, patch.psi.psi, t, patch.lambda));
  return worst;
}

BoundaryGradient boundary_gradient_check(const SteadyPatch& patch) {
  BoundaryGradient out;
  if (patch.cells1.empty() && patch.cells2.empty()) {
    out.skipped = true;
    return out;
  }
  const ScalarField& psi = patch.psi.psi;
  const Grid& g = psi.grid();
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    const auto& cells = i == 0 ? patch.cells1 : patch.cells2;
    const ScalarField& w = i == 0 ? patch.omega1 : patch.omega2;
    const double sgn = i == 0 ? sign_of(patch.vortex.kappa1) : sign_of(patch.vortex.kappa2);
    for (int k : cells)
      for (int d = 0; d < 4; ++d) {
        const int nb = g.neighbor(k, d);
        if (nb >= 0 && w[nb] != 0.0) continue;
        const double outside = nb >= 0 ? psi[nb] : 0.0;
        const double deriv = sgn * (outside - psi[k]) / g.h();
        out.min = std::min(out.min, deriv);
        out.max = std::max(out.max, deriv);
        ++out.links;
      }
  }
  return out;
}

}  // namespace vpatch
