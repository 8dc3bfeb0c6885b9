#pragma once

// Euler evolution of vorticity by backward characteristics, perturbations
// inside the rearrangement class of a steady patch, and the probes built on
// them: stability time series, the level-set comparison chain and the
// self-interaction comparison with ball rearrangements.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "vpatch/steady_solver.hpp"

namespace vpatch {

enum class AdvectionScheme {
  /// Interpolate omega_n at the departure points, then restore the per-sign
  /// circulation on cells with headroom.
  Direct,
  /// Carry the backward map X_t, sample omega_0 at X_t(x) and reassign the
  /// values of omega_0 by rank, so the cell-value histogram is exact.
  Mapped,
};

struct LedgerEntry {
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double max_abs = 0.0;
  /// h^2 sum |sorted(omega_t) - sorted(omega_0)|; zero when the histogram is unchanged.
  double distribution_error = 0.0;
};

struct EvolutionState {
  ScalarField omega;
  double t = 0.0;
  double dt = 0.0;
  AdvectionScheme scheme = AdvectionScheme::Mapped;
  std::vector<LedgerEntry> ledger;

  // Reference data fixed at t = 0.
  std::vector<double> sorted0;  // inside values of omega(0), decreasing
  double lo = 0.0, hi = 0.0;     // pointwise bounds of omega(0)
  double mass_pos = 0.0, mass_neg = 0.0;

  // Mapped: omega is the rank remap of anchor(X(x)), X the backward map since
  // the last reset. The map is reset, and the unquantised sample becomes the
  // new anchor, once |grad X| exceeds max_deformation.
  ScalarField anchor;
  ScalarField map_x, map_y;
  double max_deformation = 2.0;
  int resets = 0;

  VelocityField v_now;
  std::optional<VelocityField> v_prev;
};

/// Largest Frobenius norm of grad X over inside cells, divided by sqrt 2 (one
/// for rigid motions).
double map_deformation(const ScalarField& map_x, const ScalarField& map_y);

EvolutionState start_evolution(const ScalarField& omega0, const GreenOperator& green, double dt,
                               AdvectionScheme scheme = AdvectionScheme::Mapped);

/// One step of length state.dt. Throws CFLViolation when dt |v|_inf > h / 2.
EvolutionState step(const EvolutionState& state, const GreenOperator& green);

/// max |v| over inside cells.
double max_speed(const VelocityField& v);

/// Bilinear interpolation over inside cells only (weights renormalised near
/// the wall), clipped to the stencil's range.
double interpolate(const ScalarField& f, Vec2 p);

/// Mirror image of p across the nearest wall when p has left the domain.
Vec2 reflect_into(const Domain& d, Vec2 p);

/// 4 pi |Omega_1| / |kappa_1|.
double turnover_time(const SteadyPatch& base);

/// The N = round(|kappa| / (lambda h^2)) cells nearest the domain centre at
/// value sign(kappa) lambda.
ScalarField radial_patch(const GridPtr& grid, double kappa, double lambda);

/// Gives f the exact value multiset of `values` (decreasing order), assigning
/// by the rank of f; ties go to the larger `prefer` value, then lower index.
ScalarField rank_remap(const ScalarField& f, const std::vector<double>& values, const ScalarField* prefer = nullptr);

std::vector<double> sorted_values(const ScalarField& f);

struct Perturbation {
  enum class Kind { None, Translate, Rotate, Flow };
  Kind kind = Kind::None;
  int patch = 1;        // Translate: component 1 or 2
  Vec2 displacement;    // Translate, rounded to whole cells
  double angle = 0.0;   // Rotate, about the domain centre
  BumpTest xi;          // Flow: stream function of the area-preserving flow
  double time = 0.0;    // Flow

  static Perturbation none() { return {}; }
  static Perturbation translate(int patch, Vec2 d);
  static Perturbation rotate(double angle);
  static Perturbation flow(const BumpTest& xi, double time);
  double magnitude() const;
};

/// Phi_s(x) for dPhi/dt = J grad xi(Phi), classical RK4 with `steps` substeps.
Vec2 flow_map(const BumpTest& xi, Vec2 x, double s, int steps = 32);

/// A field with the cell-value histogram of base.omega. Throws SupportLeavesDomain.
ScalarField perturb(const SteadyPatch& base, const Perturbation& p);

struct ProbeOptions {
  double sample_every = 0.05;  // turnovers
  double cfl = 0.4;            // dt |v|_inf / h
  AdvectionScheme scheme = AdvectionScheme::Mapped;
  /// Called with every sampled state (snapshots).
  std::function<void(const EvolutionState&)> on_sample;
};

struct ProbeSample {
  double t = 0.0;       // in turnovers
  double l1 = 0.0;      // l1_distance(omega_t, base)
  double energy = 0.0;
  double mass = 0.0;
  double max_abs = 0.0;
};

struct ProbeResult {
  double turnover = 0.0;
  std::vector<ProbeSample> samples;
  double initial = 0.0;
  double max_l1 = 0.0;
  double ratio = 0.0;          // max / initial, or 0 when initial vanishes
  double energy_drift = 0.0;   // max |E(t) - E(0)| / E(0)
  double mass_drift = 0.0;     // max |int omega(t) - int omega(0)|
  bool bounds_exact = true;    // min omega0 <= omega_t <= max omega0 throughout
  int steps = 0;
};

/// Evolves perturb(base, p) for `horizon` turnovers, sampling the L1 distance
/// to base.omega.
ProbeResult stability_probe(const SteadyPatch& base, const Perturbation& p, double horizon,
                            const GreenOperator& green, const ProbeOptions& opts = {});

/// Same time loop from an arbitrary initial field; distances are measured
/// against `reference`, time in units of `turnover`.
ProbeResult evolve_and_measure(const ScalarField& omega0, const ScalarField& reference, double turnover,
                               double horizon, const GreenOperator& green, const ProbeOptions& opts = {});

struct LocalMaxResult {
  double e_candidate = 0.0, e_bar = 0.0, e_base = 0.0;
  double nu1 = 0.0, nu2 = 0.0;
  double tie_tolerance = 0.0;  // lambda h^2 |psi|_inf
  bool candidate_below_bar = false;
  bool bar_below_base = false;
  ScalarField bar;

  bool chain_holds() const { return candidate_below_bar && bar_below_base; }
};

/// Level-set comparison: omega_bar takes the |Omega_i| cells of extreme
/// stream function of the candidate. Throws Inapplicable when those cells
/// leave B_i, InvalidArgument when the candidate's histogram differs.
LocalMaxResult local_max_test(const SteadyPatch& base, const ScalarField& candidate, const GreenOperator& green);

/// Seeded small rearrangements of base.omega: one- and two-cell translations,
/// short area-preserving flows and rim cell swaps.
std::vector<ScalarField> small_rearrangements(const SteadyPatch& base, int count, std::uint64_t seed);

struct RieszReport {
  double candidate[2] = {0.0, 0.0};  // int int ln(1/|x-y|) w_i w_i
  double ball[2] = {0.0, 0.0};
  bool holds[2] = {false, false};
  double tolerance = 1e-3;

  bool passed() const { return holds[0] && holds[1]; }
};

/// int int ln(1/|x-y|) f(x) f(y) by the double cell sum, with the diagonal
/// cells integrated exactly.
double log_self_interaction(const ScalarField& f);

/// The cells nearest `center`, as many as f has support cells, at f's value.
ScalarField ball_rearrangement(const ScalarField& f, Vec2 center);

/// Seeded two-component shapes with the cell counts of base: ellipses,
/// rectangles and crosses of aspect up to 4, and random accretion blobs, each
/// inside its isolating ball.
std::vector<ScalarField> riesz_candidates(const SteadyPatch& base, int count, std::uint64_t seed);

/// Compares each signed component of the candidate with its ball
/// rearrangement. Throws NonDiskDomain off the unit disk, Inapplicable when a
/// component leaves its isolating ball.
RieszReport riesz_check(const SteadyPatch& base, const ScalarField& candidate, double tolerance = 1e-3);

}  // namespace vpatch
