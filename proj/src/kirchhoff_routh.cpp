#include "vpatch/kirchhoff_routh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace vpatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double free_kernel(Vec2 x, Vec2 y) { return -std::log(distance(x, y)) / kTwoPi; }

}  // namespace

void validate(const KRPoint& p, const Domain& domain) {
  if (!(p.kappa1 > 0.0) || !(p.kappa2 < 0.0))
    throw Error(ErrorCode::InvalidArgument, "need kappa1 > 0 > kappa2");
  if (distance(p.x1, p.x2) < 1e-12) throw Error(ErrorCode::CoincidentPoints, "x1 and x2 coincide");
  if (!domain.contains(p.x1) || !domain.contains(p.x2))
    throw Error(ErrorCode::OutsideDomain, "vortex position outside the domain");
}

// ---------------------------------------------------------------------------

class PointGreen::Impl {
 public:
  virtual ~Impl() = default;
  virtual const Domain& domain() const = 0;
  virtual double regular(Vec2 x, Vec2 y) const = 0;
  virtual double clearance() const = 0;
};

namespace {

class DiskPointGreen final : public PointGreen::Impl {
 public:
  const Domain& domain() const override { return disk_; }
  double regular(Vec2 x, Vec2 y) const override {
    if (dot(x, x) >= 1.0 || dot(y, y) >= 1.0) throw Error(ErrorCode::OutsideDomain, "point outside the unit disk");
    return regular_part_disk(x, y);
  }
  double clearance() const override { return 1e-9; }

 private:
  Domain disk_ = Domain::unit_disk();
};

class GridPointGreen final : public PointGreen::Impl {
 public:
  explicit GridPointGreen(GreenOperator op) : op_(std::move(op)) {}

  const Domain& domain() const override { return op_.grid().domain(); }
  double clearance() const override { return 2.0 * op_.grid().h(); }

  // Symmetrised: both extensions are needed by kr_value anyway.
  double regular(Vec2 x, Vec2 y) const override {
    if (x == y) return interpolate(extension(y), x);
    return 0.5 * (interpolate(extension(y), x) + interpolate(extension(x), y));
  }

 private:
  static constexpr std::size_t kCacheLimit = 512;

  const ScalarField& extension(Vec2 y) const {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(y.x, y.y);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (!op_.grid().domain().contains(y)) throw Error(ErrorCode::OutsideDomain, "source point outside the domain");
    if (cache_.size() >= kCacheLimit) cache_.clear();
    auto field = op_.harmonic_extension([y](Vec2 z) { return free_kernel(z, y); });
    return cache_.emplace(key, std::move(field)).first->second;
  }

  double interpolate(const ScalarField& f, Vec2 p) const {
    const Grid& g = f.grid();
    const double s = (p.x - g.origin().x) / g.h() - 0.5;
    const double t = (p.y - g.origin().y) / g.h() - 0.5;
    const int i0 = static_cast<int>(std::floor(s)), j0 = static_cast<int>(std::floor(t));
    const double a = s - i0, b = t - j0;
    if (g.inside(i0, j0) && g.inside(i0 + 1, j0) && g.inside(i0, j0 + 1) && g.inside(i0 + 1, j0 + 1)) {
      return (1 - a) * (1 - b) * f.at(i0, j0) + a * (1 - b) * f.at(i0 + 1, j0) + (1 - a) * b * f.at(i0, j0 + 1) +
             a * b * f.at(i0 + 1, j0 + 1);
    }
    const int k = g.cell_at(p);
    if (k < 0 || !g.inside(k)) throw Error(ErrorCode::OutsideDomain, "evaluation point outside the grid mask");
    return f[k];
  }

  GreenOperator op_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<double, double>, ScalarField> cache_;
};

}  // namespace

PointGreen PointGreen::disk() {
  PointGreen g;
  g.impl_ = std::make_shared<DiskPointGreen>();
  return g;
}

PointGreen PointGreen::from_grid(GreenOperator op) {
  if (op.backend() == GreenBackend::AnalyticDiskQuadrature)
    throw Error(ErrorCode::InvalidArgument, "grid point evaluator needs a discrete backend");
  PointGreen g;
  g.impl_ = std::make_shared<GridPointGreen>(std::move(op));
  return g;
}

const Domain& PointGreen::domain() const { return impl_->domain(); }
double PointGreen::regular(Vec2 x, Vec2 y) const { return impl_->regular(x, y); }
double PointGreen::clearance() const { return impl_->clearance(); }

double PointGreen::green(Vec2 x, Vec2 y) const {
  if (distance(x, y) < 1e-12) throw Error(ErrorCode::CoincidentPoints, "green needs x != y");
  return free_kernel(x, y) - regular(x, y);
}

double kr_value(const KRPoint& p, const PointGreen& g) {
  validate(p, g.domain());
  return -2.0 * p.kappa1 * p.kappa2 * g.green(p.x1, p.x2) + p.kappa1 * p.kappa1 * g.robin(p.x1) +
         p.kappa2 * p.kappa2 * g.robin(p.x2);
}

// ---------------------------------------------------------------------------

bool SearchBox::contains(const KRPoint& p) const {
  auto in = [](Vec2 x, Vec2 lo, Vec2 hi) { return x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y; };
  return in(p.x1, lo1, hi1) && in(p.x2, lo2, hi2);
}

SearchBox default_search_box(const KRPoint& seed, const Domain& domain) {
  const Vec2 lo = domain.origin(), hi = domain.origin() + domain.extent();
  const double r = 0.25 * norm(domain.extent());
  auto clip = [&](Vec2 c, double s) {
    return Vec2{std::clamp(c.x + s * r, lo.x, hi.x), std::clamp(c.y + s * r, lo.y, hi.y)};
  };
  return {clip(seed.x1, -1), clip(seed.x1, 1), clip(seed.x2, -1), clip(seed.x2, 1)};
}

namespace {

using Vec4 = std::array<double, 4>;

KRPoint unpack(const Vec4& v, const KRPoint& like) { return {{v[0], v[1]}, {v[2], v[3]}, like.kappa1, like.kappa2}; }
Vec4 pack(const KRPoint& p) { return {p.x1.x, p.x1.y, p.x2.x, p.x2.y}; }

struct Objective {
  const PointGreen& g;
  const SearchBox& box;
  KRPoint like;
  int evaluations = 0;

  bool admissible(const KRPoint& p) const {
    const Domain& d = g.domain();
    const double c = g.clearance();
    return box.contains(p) && distance(p.x1, p.x2) > c && d.contains(p.x1) && d.contains(p.x2) &&
           d.distance_to_boundary(p.x1) > c && d.distance_to_boundary(p.x2) > c;
  }

  double operator()(const Vec4& v) {
    const KRPoint p = unpack(v, like);
    if (!admissible(p)) return kInf;
    ++evaluations;
    return kr_value(p, g);
  }
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
Vec4 nelder_mead(Objective& f, Vec4 start, Vec4 step, double tol, int max_evals) {
  std::array<Vec4, 5> x;
  std::array<double, 5> fx;
  x[0] = start;
  for (int k = 0; k < 4; ++k) {
    x[k + 1] = start;
    x[k + 1][k] += step[k];
  }
  for (int k = 0; k < 5; ++k) fx[k] = f(x[k]);
  auto combine = [](const Vec4& a, const Vec4& b, double t) {
    Vec4 r;
    for (int k = 0; k < 4; ++k) r[k] = a[k] + t * (b[k] - a[k]);
    return r;
  };
  for (int it = 0; f.evaluations < max_evals && it < 100 * max_evals; ++it) {
    std::array<int, 5> order;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    std::array<Vec4, 5> xs;
    std::array<double, 5> fs;
    for (int k = 0; k < 5; ++k) {
      xs[k] = x[order[k]];
      fs[k] = fx[order[k]];
    }
    x = xs;
    fx = fs;
    double size = 0.0;
    for (int k = 1; k < 5; ++k)
      for (int c = 0; c < 4; ++c) size = std::max(size, std::abs(x[k][c] - x[0][c]));
    if (std::isfinite(fx[4]) && fx[4] - fx[0] <= tol * (1.0 + std::abs(fx[0])) && size < 1e-9) break;
    if (size < 1e-14) break;

    Vec4 centroid{};
    for (int k = 0; k < 4; ++k)
      for (int c = 0; c < 4; ++c) centroid[c] += 0.25 * x[k][c];
    const Vec4 xr = combine(centroid, x[4], -1.0);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const Vec4 xe = combine(centroid, x[4], -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        x[4] = xe;
        fx[4] = fe;
      } else {
        x[4] = xr;
        fx[4] = fr;
      }
    } else if (fr < fx[3]) {
      x[4] = xr;
      fx[4] = fr;
    } else {
      const bool outside = fr < fx[4];
      const Vec4 xc = combine(centroid, outside ? xr : x[4], 0.5);
      const double fc = f(xc);
      if (fc < (outside ? fr : fx[4])) {
        x[4] = xc;
        fx[4] = fc;
      } else {
        for (int k = 1; k < 5; ++k) {
          x[k] = combine(x[0], x[k], 0.5);
          fx[k] = f(x[k]);
        }
      }
    }
  }
  const auto best = std::min_element(fx.begin(), fx.end()) - fx.begin();
  return x[static_cast<std::size_t>(best)];
}

/// Deterministic quasi-uniform directions on S^3 (Kronecker sequence through
/// Hopf coordinates), optionally projected off a unit tangent vector.
std::vector<Vec4> sphere_directions(int count, const Vec4* tangent) {
  std::vector<Vec4> dirs;
  auto push = [&](Vec4 d) {
    if (tangent) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += d[k] * (*tangent)[k];
      for (int k = 0; k < 4; ++k) d[k] -= s * (*tangent)[k];
    }
    const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
    if (n < 1e-6) return;
    for (double& c : d) c /= n;
    dirs.push_back(d);
  };
  for (int k = 0; k < 4; ++k)
    for (double s : {1.0, -1.0}) {
      Vec4 d{};
      d[k] = s;
      push(d);
    }
  // Generalised golden ratio for three dimensions.
  constexpr double phi = 1.2207440846057596;
  const double a1 = 1.0 / phi, a2 = 1.0 / (phi * phi), a3 = 1.0 / (phi * phi * phi);
  for (int i = 1; static_cast<int>(dirs.size()) < count; ++i) {
    const double u = std::fmod(0.5 + a1 * i, 1.0), v = std::fmod(0.5 + a2 * i, 1.0), w = std::fmod(0.5 + a3 * i, 1.0);
    const double eta = std::asin(std::sqrt(u));
    const double t1 = kTwoPi * v, t2 = kTwoPi * w;
    push({std::cos(eta) * std::cos(t1), std::cos(eta) * std::sin(t1), std::sin(eta) * std::cos(t2),
          std::sin(eta) * std::sin(t2)});
  }
  return dirs;
}

struct Certificate {
  double margin = kInf;
  int samples = 0;
};

Certificate certify(const KRPoint& p, double h_min, double delta, const std::vector<Vec4>& dirs, const PointGreen& g) {
  Certificate c;
  for (const Vec4& d : dirs) {
    // Scale onto the boundary of B_delta x B_delta.
    const double r = std::max(std::hypot(d[0], d[1]), std::hypot(d[2], d[3]));
    const double s = delta / r;
    KRPoint q = p;
    q.x1 += Vec2{s * d[0], s * d[1]};
    q.x2 += Vec2{s * d[2], s * d[3]};
    c.margin = std::min(c.margin, kr_value(q, g) - h_min);
    ++c.samples;
  }
  return c;
}

}  // namespace

KRSearch search_local_min(const KRPoint& seed, const SearchBox& box, const PointGreen& g,
                          const KRSearchOptions& opts) {
  validate(seed, g.domain());
  if (opts.scan_points < 2 || opts.certificate_samples < 64)
    throw Error(ErrorCode::InvalidArgument, "need scan_points >= 2 and certificate_samples >= 64");
  KRSearch out;
  Objective f{g, box, seed};

  // Coarse scan over admissible lattice points of each box.
  const int m = opts.scan_points;
  auto lattice = [&](Vec2 lo, Vec2 hi) {
    std::vector<Vec2> pts;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const Vec2 p{lo.x + (hi.x - lo.x) * a / (m - 1), lo.y + (hi.y - lo.y) * b / (m - 1)};
        if (g.domain().contains(p) && g.domain().distance_to_boundary(p) > g.clearance()) pts.push_back(p);
      }
    return pts;
  };
  const auto l1 = lattice(box.lo1, box.hi1), l2 = lattice(box.lo2, box.hi2);
  Vec4 best = pack(seed);
  double best_value = f(best);
  for (Vec2 a : l1)
    for (Vec2 b : l2) {
      const Vec4 v{a.x, a.y, b.x, b.y};
      const double value = f(v);
      if (!std::isfinite(value)) continue;
      out.scan.push_back({a, b, value});
      if (value < best_value) {
        best_value = value;
        best = v;
      }
    }
  if (!std::isfinite(best_value)) throw Error(ErrorCode::NoInteriorMinimum, "no admissible point in the search box");

  const Vec4 step{0.5 * (box.hi1.x - box.lo1.x) / (m - 1), 0.5 * (box.hi1.y - box.lo1.y) / (m - 1),
                  0.5 * (box.hi2.x - box.lo2.x) / (m - 1), 0.5 * (box.hi2.y - box.lo2.y) / (m - 1)};
  Vec4 x = nelder_mead(f, best, step, opts.tolerance, opts.max_evaluations);
  // Restart once with a small simplex; guards against premature collapse.
  const Vec4 small{1e-3, 1e-3, 1e-3, 1e-3};
  x = nelder_mead(f, x, small, opts.tolerance, f.evaluations + opts.max_evaluations);
  out.evaluations = f.evaluations;

  KRPoint p = unpack(x, seed);
  auto near_face = [](double v, double lo, double hi) {
    const double w = std::max(hi - lo, 1e-300);
    return v - lo < 1e-4 * w || hi - v < 1e-4 * w;
  };
  if (near_face(p.x1.x, box.lo1.x, box.hi1.x) || near_face(p.x1.y, box.lo1.y, box.hi1.y) ||
      near_face(p.x2.x, box.lo2.x, box.hi2.x) || near_face(p.x2.y, box.lo2.y, box.hi2.y))
    throw Error(ErrorCode::NoInteriorMinimum, "descent reached the search box boundary");

  KRMinimum& res = out.minimum;
  const Vec4* tangent = nullptr;
  Vec4 t{};
  if (g.rotation_invariant()) {
    // Canonical representative of the rotation orbit: x1 - x2 along the seed's direction.
    const Vec2 want = seed.x1 - seed.x2, have = p.x1 - p.x2;
    const double angle = std::atan2(want.y, want.x) - std::atan2(have.y, have.x);
    p.x1 = rotate(p.x1, angle);
    p.x2 = rotate(p.x2, angle);
    const Vec2 j1 = rotate_cw(p.x1), j2 = rotate_cw(p.x2);
    const double n = std::sqrt(dot(j1, j1) + dot(j2, j2));
    if (n > 1e-12) {
      t = {j1.x / n, j1.y / n, j2.x / n, j2.y / n};
      tangent = &t;
      res.symmetry_reduced = true;
    }
  }
  res.point = p;
  res.value = kr_value(p, g);

  const auto dirs = sphere_directions(opts.certificate_samples, tangent);
  const Domain& d = g.domain();
  const double sep = distance(p.x1, p.x2);
  double delta = 0.25 * std::min({sep, d.distance_to_boundary(p.x1), d.distance_to_boundary(p.x2)});
  const double floor = 1e-6 * norm(d.extent());
  for (; delta >= floor; delta *= 0.5) {
    const Ball b1{p.x1, delta}, b2{p.x2, delta};
    if (2.0 * delta >= sep || !ball_compactly_inside(d, b1, g.clearance()) || !ball_compactly_inside(d, b2, g.clearance()))
      continue;
    const Certificate c = certify(p, res.value, delta, dirs, g);
    res.strictness_margin = c.margin;
    res.certificate_samples = c.samples;
    if (c.margin > 1e-10) {
      res.delta = delta;
      res.b1 = b1;
      res.b2 = b2;
      return out;
    }
  }
  throw Error(ErrorCode::DegenerateMinimum, "strictness certificate failed down to the smallest delta");
}

}  // namespace vpatch
