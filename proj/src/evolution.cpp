#include "vpatch/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vpatch {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

double mass_of(const ScalarField& f, double sgn) {
  double m = 0.0;
  for (int k : f.grid().inside_cells())
    if (sgn * f[k] > 0.0) m += f[k];
  return m * f.grid().cell_area();
}

double distribution_error(const ScalarField& f, const std::vector<double>& sorted0) {
  const auto s = sorted_values(f);
  double e = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) e += std::abs(s[k] - sorted0[k]);
  return e * f.grid().cell_area();
}

LedgerEntry ledger_entry(const EvolutionState& s, const ScalarField& psi) {
  return {s.t, 0.5 * inner(s.omega, psi), integrate(s.omega), s.omega.max_abs(),
          distribution_error(s.omega, s.sorted0)};
}

ScalarField from_values(const GridPtr& g, std::vector<double> v) { return ScalarField(g, std::move(v)); }

/// Nearest inside cell to p within a small window, for points whose bilinear
/// stencil holds no inside cell.
int nearest_inside(const Grid& g, Vec2 p) {
  const int ci = static_cast<int>(std::floor((p.x - g.origin().x) / g.h()));
  const int cj = static_cast<int>(std::floor((p.y - g.origin().y) / g.h()));
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= 4 && best < 0; ++r)
    for (int j = cj - r; j <= cj + r; ++j)
      for (int i = ci - r; i <= ci + r; ++i) {
        if (!g.inside(i, j)) continue;
        const double d = distance(g.center(i, j), p);
        if (d < bd) {
          bd = d;
          best = g.index(i, j);
        }
      }
  return best;
}

/// Adds to the cells of one sign, in proportion to w = |f| (bound - |f|),
/// until the sign's circulation is back at `target`.
void restore_mass(std::vector<double>& f, const Grid& g, double sgn, double bound, double target) {
  const double h2 = g.cell_area();
  for (int pass = 0; pass < 20; ++pass) {
    double m = 0.0, wsum = 0.0;
    for (int k : g.inside_cells()) {
      const double a = sgn * f[k];
      if (a <= 0.0) continue;
      m += a;
      wsum += a * (bound - a);
    }
    const double deficit = std::abs(target) / h2 - m;
    if (wsum <= 0.0 || std::abs(deficit) <= 1e-15 * std::abs(target) / h2) return;
    const double delta = deficit / wsum;
    for (int k : g.inside_cells()) {
      const double a = sgn * f[k];
      if (a <= 0.0) continue;
      f[k] = sgn * std::clamp(a + delta * a * (bound - a), 0.0, bound);
    }
  }
}

VelocityField blend(const VelocityField& now, const std::optional<VelocityField>& prev) {
  if (!prev) return now;
  return {1.5 * now.u - 0.5 * prev->u, 1.5 * now.v - 0.5 * prev->v};
}

}  // namespace

double interpolate(const ScalarField& f, Vec2 p) {
  const Grid& g = f.grid();
  const double gx = (p.x - g.origin().x) / g.h() - 0.5, gy = (p.y - g.origin().y) / g.h() - 0.5;
  const int i0 = static_cast<int>(std::floor(gx)), j0 = static_cast<int>(std::floor(gy));
  const double fx = gx - i0, fy = gy - j0;
  const int is[4] = {i0, i0 + 1, i0, i0 + 1}, js[4] = {j0, j0, j0 + 1, j0 + 1};
  const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  double acc = 0.0, wsum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int q = 0; q < 4; ++q) {
    if (!g.inside(is[q], js[q]) || ws[q] <= 0.0) continue;
    const double v = f[g.index(is[q], js[q])];
    acc += ws[q] * v;
    wsum += ws[q];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (wsum <= 1e-12) {
    const int k = nearest_inside(g, p);
    return k >= 0 ? f[k] : 0.0;
  }
  return std::clamp(acc / wsum, lo, hi);
}

Vec2 reflect_into(const Domain& d, Vec2 p) {
  if (d.contains(p)) return p;
  if (d.is_disk()) {
    const double r = norm(p);
    const double back = std::max(2.0 - r, 0.0);
    Vec2 q = (back / r) * p;
    if (!d.contains(q)) q = (1.0 - 1e-12) / norm(q) * q;
    return q;
  }
  if (d.is_rectangle()) {
    const Vec2 e = d.extent();
    auto fold = [](double x, double len) {
      if (x < 0.0) x = -x;
      if (x > len) x = 2.0 * len - x;
      return std::clamp(x, 0.0, len);
    };
    return {fold(p.x, e.x), fold(p.y, e.y)};
  }
  return p;  // raster domains fall back to the nearest inside cell in interpolate()
}

double map_deformation(const ScalarField& map_x, const ScalarField& map_y) {
  const Grid& g = map_x.grid();
  const double inv2h = 0.5 / g.h();
  double worst = 0.0;
  for (int k : g.inside_cells()) {
    int nb[4];
    bool interior = true;
    for (int d = 0; d < 4; ++d) {
      nb[d] = g.neighbor(k, d);
      interior = interior && nb[d] >= 0;
    }
    if (!interior) continue;
    const double a = (map_x[nb[0]] - map_x[nb[1]]) * inv2h, b = (map_x[nb[2]] - map_x[nb[3]]) * inv2h;
    const double c = (map_y[nb[0]] - map_y[nb[1]]) * inv2h, d = (map_y[nb[2]] - map_y[nb[3]]) * inv2h;
    worst = std::max(worst, a * a + b * b + c * c + d * d);
  }
  return std::sqrt(0.5 * worst);
}

double max_speed(const VelocityField& v) {
  double m = 0.0;
  for (int k : v.u.grid().inside_cells()) m = std::max(m, std::hypot(v.u[k], v.v[k]));
  return m;
}

std::vector<double> sorted_values(const ScalarField& f) {
  std::vector<double> out;
  out.reserve(f.grid().inside_count());
  for (int k : f.grid().inside_cells()) out.push_back(f[k]);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

ScalarField rank_remap(const ScalarField& f, const std::vector<double>& values, const ScalarField* prefer) {
  const Grid& g = f.grid();
  const auto& cells = g.inside_cells();
  if (values.size() != cells.size()) throw Error(ErrorCode::InvalidArgument, "value count differs from cell count");
  std::vector<int> order(cells.begin(), cells.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (f[a] != f[b]) return f[a] > f[b];
    if (prefer && (*prefer)[a] != (*prefer)[b]) return (*prefer)[a] > (*prefer)[b];
    return a < b;
  });
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = values[k];
  return from_values(f.grid_ptr(), std::move(out));
}

EvolutionState start_evolution(const ScalarField& omega0, const GreenOperator& green, double dt,
                               AdvectionScheme scheme) {
  require_same_grid(omega0, ScalarField(green.grid_ptr()));
  const GridPtr& gp = omega0.grid_ptr();
  EvolutionState s;
  s.omega = s.anchor = omega0;
  s.dt = dt;
  s.scheme = scheme;
  s.sorted0 = sorted_values(omega0);
  s.lo = std::min(0.0, s.sorted0.back());
  s.hi = std::max(0.0, s.sorted0.front());
  s.mass_pos = mass_of(omega0, 1.0);
  s.mass_neg = mass_of(omega0, -1.0);
  s.map_x = sample(gp, [](Vec2 p) { return p.x; });
  s.map_y = sample(gp, [](Vec2 p) { return p.y; });
  const ScalarField psi = green.apply(omega0);
  s.v_now = velocity(psi);
  s.ledger.push_back(ledger_entry(s, psi));
  return s;
}

EvolutionState step(const EvolutionState& state, const GreenOperator& green) {
  const Grid& g = state.omega.grid();
  const GridPtr& gp = state.omega.grid_ptr();
  const double dt = state.dt;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  const VelocityField vstar = blend(state.v_now, state.v_prev);
  const double vmax = std::max(max_speed(state.v_now), max_speed(vstar));
  if (dt * vmax > 0.5 * g.h() * (1.0 + 1e-12))
    throw Error(ErrorCode::CFLViolation, "dt |v| = " + std::to_string(dt * vmax / g.h()) + " h exceeds h/2");

  const Domain& dom = g.domain();
  std::vector<Vec2> departure(g.size());
  for (int k : g.inside_cells()) {
    const Vec2 x = g.center(k);
    const Vec2 mid = reflect_into(dom, x - 0.5 * dt * Vec2{vstar.u[k], vstar.v[k]});
    const Vec2 vm{interpolate(vstar.u, mid), interpolate(vstar.v, mid)};
    departure[k] = reflect_into(dom, x - dt * vm);
  }

  EvolutionState next = state;
  next.t = state.t + dt;
  std::vector<double> w(g.size(), 0.0);
  if (state.scheme == AdvectionScheme::Mapped) {
    std::vector<double> mx(g.size(), 0.0), my(g.size(), 0.0);
    for (int k : g.inside_cells()) {
      const Vec2 back = reflect_into(dom, {interpolate(state.map_x, departure[k]), interpolate(state.map_y, departure[k])});
      mx[k] = back.x;
      my[k] = back.y;
      w[k] = interpolate(state.anchor, back);
    }
    next.map_x = from_values(gp, std::move(mx));
    next.map_y = from_values(gp, std::move(my));
    ScalarField sampled = from_values(gp, std::move(w));
    next.omega = rank_remap(sampled, state.sorted0, &state.omega);
    if (map_deformation(next.map_x, next.map_y) > state.max_deformation) {
      next.anchor = std::move(sampled);
      next.map_x = sample(gp, [](Vec2 p) { return p.x; });
      next.map_y = sample(gp, [](Vec2 p) { return p.y; });
      ++next.resets;
    }
  } else {
    for (int k : g.inside_cells()) w[k] = std::clamp(interpolate(state.omega, departure[k]), state.lo, state.hi);
    if (state.hi > 0.0) restore_mass(w, g, 1.0, state.hi, state.mass_pos);
    if (state.lo < 0.0) restore_mass(w, g, -1.0, -state.lo, state.mass_neg);
    next.omega = from_values(gp, std::move(w));
  }

  const ScalarField psi = green.apply(next.omega);
  next.v_prev = state.v_now;
  next.v_now = velocity(psi);
  next.ledger.push_back(ledger_entry(next, psi));
  return next;
}

double turnover_time(const SteadyPatch& base) {
  const double area = static_cast<double>(base.cells1.size()) * base.omega.grid().cell_area();
  return 4.0 * kPi * area / std::abs(base.vortex.kappa1);
}

ScalarField radial_patch(const GridPtr& grid, double kappa, double lambda) {
  const int n = patch_cell_count(kappa, lambda, grid->h());
  const Vec2 c = grid->domain().center();
  std::vector<int> cells = grid->inside_cells();
  if (n > static_cast<int>(cells.size())) throw Error(ErrorCode::InfeasibleArea, "patch larger than the domain");
  std::stable_sort(cells.begin(), cells.end(),
                   [&](int a, int b) { return distance(grid->center(a), c) < distance(grid->center(b), c); });
  std::vector<double> v(grid->size(), 0.0);
  for (int k = 0; k < n; ++k) v[cells[k]] = (kappa > 0.0 ? 1.0 : -1.0) * lambda;
  return from_values(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Perturbations

Perturbation Perturbation::translate(int patch, Vec2 d) {
  Perturbation p;
  p.kind = Kind::Translate;
  p.patch = patch;
  p.displacement = d;
  return p;
}

Perturbation Perturbation::rotate(double angle) {
  Perturbation p;
  p.kind = Kind::Rotate;
  p.angle = angle;
  return p;
}

Perturbation Perturbation::flow(const BumpTest& xi, double time) {
  Perturbation p;
  p.kind = Kind::Flow;
  p.xi = xi;
  p.time = time;
  return p;
}

double Perturbation::magnitude() const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Translate: return norm(displacement);
    case Kind::Rotate: return std::abs(angle);
    case Kind::Flow: return std::abs(time) * xi.max_gradient();
  }
  return 0.0;
}

Vec2 flow_map(const BumpTest& xi, Vec2 x, double s, int steps) {
  const auto vel = [&](Vec2 p) { return rotate_cw(xi.gradient(p)); };
  const double dt = s / steps;
  for (int k = 0; k < steps; ++k) {
    const Vec2 k1 = vel(x);
    const Vec2 k2 = vel(x + 0.5 * dt * k1);
    const Vec2 k3 = vel(x + 0.5 * dt * k2);
    const Vec2 k4 = vel(x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

namespace {

/// Shifts one component by whole cells; its cells must land on empty inside cells.
ScalarField shift_component(const ScalarField& rest, const ScalarField& part, int di, int dj) {
  const Grid& g = rest.grid();
  std::vector<double> v(rest.values().begin(), rest.values().end());
  for (int k : g.inside_cells()) {
    if (part[k] == 0.0) continue;
    const int i = g.col(k) + di, j = g.row(k) + dj;
    if (!g.inside(i, j)) throw Error(ErrorCode::SupportLeavesDomain, "translated support leaves the domain");
    const int t = g.index(i, j);
    if (v[t] != 0.0) throw Error(ErrorCode::InvalidArgument, "translated component lands on the other component");
    v[t] = part[k];
  }
  return from_values(rest.grid_ptr(), std::move(v));
}

/// Pulls the field back through `inverse`, after checking that the forward
/// image of every support cell stays in the domain, and restores the histogram.
ScalarField transport(const ScalarField& omega, const std::function<Vec2(Vec2)>& forward,
                      const std::function<Vec2(Vec2)>& inverse) {
  const Grid& g = omega.grid();
  for (int k : g.inside_cells())
    if (omega[k] != 0.0 && !g.contains(forward(g.center(k))))
      throw Error(ErrorCode::SupportLeavesDomain, "transported support leaves the domain");
  const ScalarField pulled = sample(omega.grid_ptr(), [&](Vec2 p) { return interpolate(omega, inverse(p)); });
  return rank_remap(pulled, sorted_values(omega), &omega);
}

}  // namespace

ScalarField perturb(const SteadyPatch& base, const Perturbation& p) {
  const Grid& g = base.omega.grid();
  switch (p.kind) {
    case Perturbation::Kind::None: return base.omega;
    case Perturbation::Kind::Translate: {
      if (p.patch != 1 && p.patch != 2) throw Error(ErrorCode::InvalidArgument, "patch index must be 1 or 2");
      const int di = static_cast<int>(std::lround(p.displacement.x / g.h()));
      const int dj = static_cast<int>(std::lround(p.displacement.y / g.h()));
      const ScalarField& part = p.patch == 1 ? base.omega1 : base.omega2;
      return shift_component(base.omega - part, part, di, dj);
    }
    case Perturbation::Kind::Rotate: {
      const Vec2 c = g.domain().center();
      return transport(
          base.omega, [&](Vec2 x) { return c + rotate(x - c, p.angle); },
          [&](Vec2 x) { return c + rotate(x - c, -p.angle); });
    }
    case Perturbation::Kind::Flow:
      return transport(
          base.omega, [&](Vec2 x) { return flow_map(p.xi, x, p.time); },
          [&](Vec2 x) { return flow_map(p.xi, x, -p.time); });
  }
  return base.omega;
}

// ---------------------------------------------------------------------------
// Probes

ProbeResult evolve_and_measure(const ScalarField& omega0, const ScalarField& reference, double turnover,
                               double horizon, const GreenOperator& green, const ProbeOptions& opts) {
  if (!(turnover > 0.0) || !(horizon >= 0.0) || !(opts.sample_every > 0.0))
    throw Error(ErrorCode::InvalidArgument, "turnover, horizon and sampling interval must be positive");
  const Grid& g = omega0.grid();
  ProbeResult out;
  out.turnover = turnover;
  EvolutionState s = start_evolution(omega0, green, 1.0, opts.scheme);
  const double e0 = s.ledger.front().energy, m0 = s.ledger.front().mass;

  auto record = [&] {
    ProbeSample ps;
    ps.t = s.t / turnover;
    ps.l1 = l1_distance(s.omega, reference);
    ps.energy = s.ledger.back().energy;
    ps.mass = s.ledger.back().mass;
    ps.max_abs = s.ledger.back().max_abs;
    out.samples.push_back(ps);
    out.max_l1 = std::max(out.max_l1, ps.l1);
    if (e0 != 0.0) out.energy_drift = std::max(out.energy_drift, std::abs(ps.energy - e0) / std::abs(e0));
    out.mass_drift = std::max(out.mass_drift, std::abs(ps.mass - m0));
    if (s.omega.min_value() < s.lo || s.omega.max_value() > s.hi) out.bounds_exact = false;
    if (opts.on_sample) opts.on_sample(s);
  };
  record();
  out.initial = out.samples.front().l1;

  const int intervals = static_cast<int>(std::lround(horizon / opts.sample_every));
  const double interval = opts.sample_every * turnover;
  for (int k = 0; k < intervals; ++k) {
    const double vmax = std::max(max_speed(s.v_now), s.v_prev ? max_speed(blend(s.v_now, s.v_prev)) : 0.0);
    const int steps = std::max(1, static_cast<int>(std::ceil(interval * vmax / (opts.cfl * g.h()))));
    s.dt = interval / steps;
    for (int j = 0; j < steps; ++j) {
      s = step(s, green);
      s.ledger.erase(s.ledger.begin(), s.ledger.end() - 1);
      ++out.steps;
    }
    s.t = (k + 1) * interval;
    record();
  }
  out.ratio = out.initial > 0.0 ? out.max_l1 / out.initial : 0.0;
  return out;
}

ProbeResult stability_probe(const SteadyPatch& base, const Perturbation& p, double horizon,
                            const GreenOperator& green, const ProbeOptions& opts) {
  return evolve_and_measure(perturb(base, p), base.omega, turnover_time(base), horizon, green, opts);
}

// ---------------------------------------------------------------------------
// Level-set comparison

LocalMaxResult local_max_test(const SteadyPatch& base, const ScalarField& candidate, const GreenOperator& green) {
  require_same_grid(candidate, base.omega);
  if (sorted_values(candidate) != sorted_values(base.omega))
    throw Error(ErrorCode::InvalidArgument, "candidate is not a rearrangement of the base patch");
  const Grid& g = candidate.grid();
  const GridPtr& gp = candidate.grid_ptr();
  const ScalarField psi = green.apply(candidate);

  std::vector<int> order = g.inside_cells();
  std::sort(order.begin(), order.end(), [&](int a, int b) { return psi[a] != psi[b] ? psi[a] > psi[b] : a < b; });
  const std::size_t n1 = base.cells1.size(), n2 = base.cells2.size();
  if (n1 + n2 >= order.size()) throw Error(ErrorCode::Inapplicable, "patch fills the domain");

  LocalMaxResult out;
  out.nu1 = psi[order[n1]];
  // Lowest psi first for the negative component, ties again by index.
  std::vector<int> low = g.inside_cells();
  std::sort(low.begin(), low.end(), [&](int a, int b) { return psi[a] != psi[b] ? psi[a] < psi[b] : a < b; });
  out.nu2 = -psi[low[n2]];

  const double lambda = base.lambda;
  std::vector<double> bar(g.size(), 0.0);
  for (std::size_t k = 0; k < n1; ++k) {
    if (!base.vortex.b1.contains(g.center(order[k])))
      throw Error(ErrorCode::Inapplicable, "superlevel set of the candidate leaves B1");
    bar[order[k]] = lambda;
  }
  for (std::size_t k = 0; k < n2; ++k) {
    if (!base.vortex.b2.contains(g.center(low[k])))
      throw Error(ErrorCode::Inapplicable, "sublevel set of the candidate leaves B2");
    bar[low[k]] = -lambda;
  }
  out.bar = from_values(gp, std::move(bar));
  out.e_candidate = 0.5 * inner(candidate, psi);
  out.e_bar = energy(green, out.bar);
  out.e_base = base.energy;
  out.tie_tolerance = lambda * g.cell_area() * base.psi.psi.max_abs();
  out.candidate_below_bar = out.e_candidate <= out.e_bar + 1e-12 * std::abs(out.e_bar);
  out.bar_below_base = out.e_bar <= out.e_base + out.tie_tolerance;
  return out;
}

std::vector<ScalarField> small_rearrangements(const SteadyPatch& base, int count, std::uint64_t seed) {
  const Grid& g = base.omega.grid();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dir(0, 7), which(1, 2), few(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int di[8] = {1, -1, 0, 0, 1, 1, -1, -1}, dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  std::vector<ScalarField> out;
  out.reserve(count);
  for (int trial = 0; trial < count; ++trial) {
    const int comp = which(rng);
    const ScalarField& part = comp == 1 ? base.omega1 : base.omega2;
    const ScalarField& other = comp == 1 ? base.omega2 : base.omega1;
    switch (trial % 4) {
      case 0: {
        const int d = dir(rng);
        out.push_back(shift_component(other, part, di[d], dj[d]));
        break;
      }
      case 1: {
        // Both components, one cell each.
        const int d1 = dir(rng), d2 = dir(rng);
        const ScalarField moved1 = shift_component(ScalarField(base.omega.grid_ptr()), base.omega1, di[d1], dj[d1]);
        out.push_back(shift_component(moved1, base.omega2, di[d2], dj[d2]));
        break;
      }
      case 2: {
        const Vec2 c = comp == 1 ? base.vortex.b1.center : base.vortex.b2.center;
        const double diam = std::max(patch_diameter(part), g.h());
        BumpTest xi;
        xi.center = c + diam * Vec2{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
        xi.half_width = diam * (1.0 + 2.0 * unit(rng));
        xi.shape = BumpShape::Tensor;
        double s = (0.5 + 1.5 * unit(rng)) * g.h() / xi.max_gradient();
        if (unit(rng) < 0.5) s = -s;
        // Grow the flow time until the rearrangement moves at least one cell.
        ScalarField moved = perturb(base, Perturbation::flow(xi, s));
        for (int grow = 0; grow < 8 && l1_distance(moved, base.omega) == 0.0; ++grow) {
          s *= 1.5;
          moved = perturb(base, Perturbation::flow(xi, s));
        }
        out.push_back(std::move(moved));
        break;
      }
      default: {
        // Swap a few rim cells with empty neighbours of the same component.
        std::vector<int> rim, halo;
        for (int k : g.inside_cells()) {
          bool edge = false;
          for (int d = 0; d < 4; ++d) {
            const int nb = g.neighbor(k, d);
            edge = edge || nb < 0 || (part[k] != 0.0) != (part[nb] != 0.0);
          }
          if (!edge || other[k] != 0.0) continue;
          (part[k] != 0.0 ? rim : halo).push_back(k);
        }
        std::shuffle(rim.begin(), rim.end(), rng);
        std::shuffle(halo.begin(), halo.end(), rng);
        const int m = std::min({few(rng), static_cast<int>(rim.size()), static_cast<int>(halo.size())});
        std::vector<double> v(base.omega.values().begin(), base.omega.values().end());
        for (int k = 0; k < m; ++k) std::swap(v[rim[k]], v[halo[k]]);
        out.push_back(from_values(base.omega.grid_ptr(), std::move(v)));
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-interaction

double log_self_interaction(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<int> support;
  for (int k : g.inside_cells())
    if (f[k] != 0.0) support.push_back(k);
  const double h = g.h(), h4 = g.cell_area() * g.cell_area();
  // Mean of ln(1/|x-y|) over pairs of points in one cell.
  const double diag = -std::log(h) + 25.0 / 12.0 - kPi / 3.0 - std::log(2.0) / 3.0;
  double s = 0.0;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const Vec2 x = g.center(support[a]);
    const double fa = f[support[a]];
    s += fa * fa * diag;
    double row = 0.0;
    for (std::size_t b = a + 1; b < support.size(); ++b)
      row += f[support[b]] * -std::log(distance(x, g.center(support[b])));
    s += 2.0 * fa * row;
  }
  return s * h4;
}

ScalarField ball_rearrangement(const ScalarField& f, Vec2 center) {
  const Grid& g = f.grid();
  std::vector<double> vals;
  for (int k : g.inside_cells())
    if (f[k] != 0.0) vals.push_back(f[k]);
  std::stable_sort(vals.begin(), vals.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  std::vector<int> cells = g.inside_cells();
  std::stable_sort(cells.begin(), cells.end(),
                   [&](int a, int b) { return distance(g.center(a), center) < distance(g.center(b), center); });
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t k = 0; k < vals.size(); ++k) v[cells[k]] = vals[k];
  return from_values(f.grid_ptr(), std::move(v));
}

RieszReport riesz_check(const SteadyPatch& base, const ScalarField& candidate, double tolerance) {
  const Grid& g = candidate.grid();
  if (!g.domain().is_disk()) throw Error(ErrorCode::NonDiskDomain, "the comparison uses the unit-disk kernel");
  RieszReport rep;
  rep.tolerance = tolerance;
  for (int i = 0; i < 2; ++i) {
    const double sgn = i == 0 ? 1.0 : -1.0;
    const Ball& ball = i == 0 ? base.vortex.b1 : base.vortex.b2;
    std::vector<double> v(g.size(), 0.0);
    Vec2 c;
    double m = 0.0;
    for (int k : g.inside_cells()) {
      if (sgn * candidate[k] <= 0.0) continue;
      if (!ball.contains(g.center(k))) throw Error(ErrorCode::Inapplicable, "component leaves its isolating ball");
      v[k] = candidate[k];
      c += std::abs(candidate[k]) * g.center(k);
      m += std::abs(candidate[k]);
    }
    if (m == 0.0) throw Error(ErrorCode::EmptySupport, "candidate component is empty");
    const ScalarField part = from_values(candidate.grid_ptr(), std::move(v));
    rep.candidate[i] = log_self_interaction(part);
    rep.ball[i] = log_self_interaction(ball_rearrangement(part, (1.0 / m) * c));
    rep.holds[i] = rep.ball[i] >= rep.candidate[i] - tolerance * std::abs(rep.ball[i]);
  }
  return rep;
}

}  // namespace vpatch

namespace vpatch {

std::vector<ScalarField> riesz_candidates(const SteadyPatch& base, int count, std::uint64_t seed) {
  const GridPtr& gp = base.omega.grid_ptr();
  const Grid& g = *gp;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // N cells of the ball minimising `score`, ties by index.
  auto shape = [&](const Ball& ball, std::size_t n, const std::function<double(Vec2)>& score) {
    std::vector<int> cells = ball_cells(g, ball);
    std::stable_sort(cells.begin(), cells.end(),
                     [&](int a, int b) { return score(g.center(a)) < score(g.center(b)); });
    cells.resize(std::min(n, cells.size()));
    return cells;
  };
  // Random accretion from the centre cell.
  auto blob = [&](const Ball& ball, std::size_t n, Vec2 c) {
    std::vector<int> set{g.cell_at(c)};
    std::vector<char> in(g.size(), 0);
    in[set[0]] = 1;
    while (set.size() < n) {
      const int from = set[static_cast<std::size_t>(unit(rng) * set.size()) % set.size()];
      const int nb = g.neighbor(from, static_cast<int>(unit(rng) * 4) % 4);
      if (nb < 0 || in[nb] || !ball.contains(g.center(nb))) continue;
      in[nb] = 1;
      set.push_back(nb);
    }
    return set;
  };

  std::vector<ScalarField> out;
  for (int trial = 0; trial < count; ++trial) {
    std::vector<double> v(g.size(), 0.0);
    for (int i = 0; i < 2; ++i) {
      const Ball& ball = i == 0 ? base.vortex.b1 : base.vortex.b2;
      const std::size_t n = i == 0 ? base.cells1.size() : base.cells2.size();
      const double value = i == 0 ? base.lambda : -base.lambda;
      const double eps = std::sqrt(n * g.cell_area() / kPi);
      const Vec2 c = ball.center + 0.3 * eps * Vec2{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
      const double aspect = 1.0 + 3.0 * unit(rng), angle = kPi * unit(rng);
      auto local = [&](Vec2 p) {
        const Vec2 q = rotate(p - c, -angle);
        return Vec2{q.x / std::sqrt(aspect), q.y * std::sqrt(aspect)};
      };
      std::vector<int> cells;
      switch (trial % 4) {
        case 0: cells = shape(ball, n, [&](Vec2 p) { const Vec2 q = local(p); return dot(q, q); }); break;
        case 1:
          cells = shape(ball, n, [&](Vec2 p) {
            const Vec2 q = local(p);
            return std::max(std::abs(q.x), std::abs(q.y)) + 1e-9 * dot(q, q);
          });
          break;
        case 2:
          cells = shape(ball, n, [&](Vec2 p) {
            const Vec2 q = rotate(p - c, -angle);
            const double arm = std::min(std::max(std::abs(q.x) / aspect, std::abs(q.y)),
                                        std::max(std::abs(q.x), std::abs(q.y) / aspect));
            return arm + 1e-9 * dot(q, q);
          });
          break;
        default: cells = blob(ball, n, c); break;
      }
      for (int k : cells) v[k] = value;
    }
    out.push_back(ScalarField(gp, std::move(v)));
  }
  return out;
}

}  // namespace vpatch
