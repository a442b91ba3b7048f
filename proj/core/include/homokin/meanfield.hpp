#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "homokin/deformation.hpp"
#include "homokin/linalg.hpp"
#include "homokin/measure.hpp"
#include "homokin/potential.hpp"
#include "homokin/rng.hpp"

namespace homokin::meanfield {

// Interaction field of a measure: -(grad U * rho)(X), evaluated as the
// weighted sum of pair forces against the measure's atoms.
Vec3 mean_force(const measure::EmpiricalMeasure& g, const PairPotential& pot, const Vec3& X);

using MeasurePath = std::function<const measure::EmpiricalMeasure&(double)>;

struct CharacteristicPoint {
  double t;
  Vec3 X, W;
};

// RK4 on dX/dt = W + L(t)X, dW/dt = -(grad U * rho_{g_t})(X) - L(t)W against
// a time-indexed measure path; one record per step including the start.
std::vector<CharacteristicPoint> integrate_characteristic(const Deformation& def,
                                                          const PairPotential& pot,
                                                          const MeasurePath& path, Vec3 X0, Vec3 W0,
                                                          double t0, double dt, double horizon);

// Force-free transport: the velocity marginal at time t is the initial one
// pushed by the propagator, w <- M(0,t) w (positions untouched).
measure::EmpiricalMeasure transport_pushforward(const measure::EmpiricalMeasure& g0,
                                                const Deformation& def, double t);

// Pointwise form of the same solution: g(t, w) = g0((I + tA) w). The mass
// integral therefore scales by 1/det(I + tA).
double transported_density(const std::function<double(const Vec3&)>& g0, const Deformation& def,
                           double t, const Vec3& w);

// Full force-free phase flow from t = 0 (free flight in lab velocity).
PhasePoint exact_phase_flow(const Deformation& def, const PhasePoint& p0, double t);

// Empirical growth/Lipschitz constants of the drift field xi(t,P) =
// (W + LX, -LW) and the interaction operator H[g](P) = (0, -(grad U*rho)(X)),
// measured on a probe box around the measure's support.
struct FieldHypothesisReport {
  double C_xi = 0;   // sup |xi| / (1 + |P|)
  double L_xi = 0;   // sup |xi(P)-xi(Q)| / |P-Q|
  double C_H = 0;    // sup |H| / (1 + |P|)
  double L_H = 0;    // state-Lipschitz constant of H at fixed g
  double L_w1 = 0;   // Lipschitz of g -> H[g] against W1 perturbations of g
  double L_P = 0;    // Lipschitz of the combined right-hand side xi + H
  double C_P = 0;    // growth constant of the combined field, sup |Psi|/(1+|P|)

  double stability_L() const { return L_P > L_w1 ? L_P : L_w1; }
};

FieldHypothesisReport measure_field_constants(const Deformation& def, const PairPotential& pot,
                                              const measure::EmpiricalMeasure& g, double t_lo,
                                              double t_hi, std::uint64_t seed,
                                              int n_samples = 512);

// Co-evolves two equal-size empirical measures under the interacting
// mean-field particle dynamics and checks W1(g_t, h_t) against the a-priori
// envelope exp(2 t L) W1(g_0, h_0), with L the running max of measured
// field constants on the evolving supports.
struct StabilityReport {
  double w1_initial = 0;
  std::vector<std::pair<double, double>> w1_at;  // (t, W1)
  double L = 0;
  double max_ratio = 0;   // max over t > 0 of W1(t) / (exp(2tL) W1(0))
  bool degenerate = false;  // W1(0) ~ 0; then max_w1 is the thing to look at
  double max_w1 = 0;
};

StabilityReport stability_check(const measure::EmpiricalMeasure& g0,
                                const measure::EmpiricalMeasure& h0, const Deformation& def,
                                const PairPotential& pot, double dt, double horizon, int n_checks,
                                std::uint64_t seed);

// Product Gaussian cloud in (x, w) used to seed studies.
struct GaussianSpec {
  Vec3 mean_x{}, mean_w{};
  double sigma_x = 1.0, sigma_w = 1.0;
};

PhasePoint sample(const GaussianSpec& spec, CounterRng& rng);
measure::EmpiricalMeasure sample_cloud(const GaussianSpec& spec, int n, CounterRng& rng);

struct ConvergenceRow {
  int N;
  std::uint64_t seed;
  double t;
  double w1;
};

struct ConvergenceSummary {
  std::vector<ConvergenceRow> rows;
  double slope = 0, slope_ci_low = 0, slope_ci_high = 0;  // log W1 vs log N
  double monotone_fraction = 0;  // seeds where W1 strictly decreases along N_list
};

// Empirical convergence of the particle approximation at t_eval. Without a
// potential the reference is an independent same-size sample pushed through
// the exact phase flow and the metric is w1_exact; with one, the reference is
// a high-N run (ref_multiplier times the largest N) and the metric is sliced
// W1 (sizes differ).
ConvergenceSummary convergence_study(const Deformation& def, const GaussianSpec& spec,
                                     const std::vector<int>& n_list,
                                     const std::vector<std::uint64_t>& seeds, double t_eval,
                                     double dt, const std::optional<PairPotential>& pot,
                                     int ref_multiplier = 8, int sliced_projections = 64);

}  // namespace homokin::meanfield
