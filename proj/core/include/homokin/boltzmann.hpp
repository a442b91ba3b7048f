#pragma once

#include <cstdint>
#include <vector>

#include "homokin/deformation.hpp"
#include "homokin/linalg.hpp"
#include "homokin/rng.hpp"
#include "homokin/series.hpp"

namespace homokin::boltzmann {

// Binary collision model for the spatially homogeneous gas, with the kinetic
// scaling 1/knudsen multiplying the whole collision operator.
//
// maxwell: collision rate per particle is rate_const * rho / knudsen,
// independent of relative speed; scattering by reflection about a direction
// drawn uniformly on S^2.
// hard_sphere: pair rate (rho/knudsen) * pi d^2 |w_i - w_j|, handled by a
// majorant g_max on the relative speed (adapted upward only, never lowered
// mid-run); accepted pairs scatter isotropically in the center-of-mass frame.
struct CollisionKernel {
  enum class Kind { maxwell, hard_sphere };
  Kind kind = Kind::maxwell;
  double rate_const = 1.0;
  double diameter = 1.0;
  double knudsen = 1.0;
  double g_max = 0.0;  // hard-sphere majorant, run state

  static CollisionKernel maxwell(double rate_const, double knudsen) {
    CollisionKernel k;
    k.kind = Kind::maxwell;
    k.rate_const = rate_const;
    k.knudsen = knudsen;
    return k;
  }
  static CollisionKernel hard_sphere(double diameter, double knudsen) {
    CollisionKernel k;
    k.kind = Kind::hard_sphere;
    k.diameter = diameter;
    k.knudsen = knudsen;
    return k;
  }
};

// Simulation velocities plus the physical number density they represent.
// Density is bookkeeping only: dilation never clones or deletes particles.
// All randomness of a run flows through the single rng stream in a fixed
// consumption order, so a (seed, config) pair fully determines the output.
struct VelocityEnsemble {
  std::vector<Vec3> w;
  double number_density = 1.0;
  double t = 0.0;
  CounterRng rng;

  VelocityEnsemble(std::vector<Vec3> w0, double rho0, std::uint64_t seed)
      : w(std::move(w0)), number_density(rho0), rng(seed, 0xd5d3c) {}
};

VelocityEnsemble gaussian_ensemble(std::size_t n, double theta, const Vec3& mean, double rho,
                                   std::uint64_t seed);
// cov must be symmetric positive definite (Cholesky sampling)
VelocityEnsemble gaussian_ensemble_aniso(std::size_t n, const Mat3& cov, const Vec3& mean,
                                         double rho, std::uint64_t seed);

// Reflection collision w_i' = w_i - ((w_i - w_j) . omega) omega (and +
// for j); conserves pair momentum and energy identically.
void scatter_reflect(Vec3& wi, Vec3& wj, const Vec3& omega);

// Rotates the relative velocity onto sigma, preserving its length and the
// pair's center of mass.
void scatter_isotropic(Vec3& wi, Vec3& wj, const Vec3& sigma);

// w <- M(t, t+dt) w for every particle; rho scales by the inverse Jacobian
// ratio so rho(t) = rho(0) / det(I + tA) holds exactly along the run.
void deformation_substep(VelocityEnsemble& ens, const Deformation& def, double dt);

// DSMC collisions over a window dt (no deformation): expected pair count
// from the kernel rate (fractional part resolved by one Bernoulli draw).
void collision_substep(VelocityEnsemble& ens, CollisionKernel& kernel, double dt);

struct Moments {
  double rho = 0;
  Vec3 u{};        // mean of w
  double e = 0;    // (1/2) <|w - u|^2>
  double theta = 0;  // 2e/3
  Mat3 P{};        // rho <c c>
  Vec3 q{};        // rho <c |c|^2>
};

Moments moments(const VelocityEnsemble& ens);

struct MomentsSeries {
  std::vector<double> t;
  std::vector<Moments> m;
};

// columns t,rho,theta,e,P11,P12,P13,P22,P23,P33,q1,q2,q3
Table to_table(const MomentsSeries& s);
MomentsSeries from_table(const Table& t);

// Strang loop: half collisions, full deformation, half collisions. Emits
// moments every `stride` steps (plus the initial state and the final one).
// Warns on stderr when the expected collisions per particle per step top 0.5.
MomentsSeries run(VelocityEnsemble& ens, const Deformation& def, CollisionKernel& kernel,
                  double dt, double horizon, int stride);

// Tail fit of theta(t) ~ C exp(2 beta t): window is the last half of the
// samples taken after theta first quadrupled (throws InsufficientGrowth when
// it never does). p_hat is the tail-averaged normalized stress P/(rho theta);
// drift compares its first- and second-half tail means in Frobenius norm.
struct SelfSimilarFit {
  double beta_hat = 0;
  double beta_se = 0;
  Mat3 p_hat{};
  double drift = 0;
  std::size_t fit_start = 0;
};

SelfSimilarFit self_similar_fit(const MomentsSeries& s);

// Relaxation-to-isotropy moment closure: d rho/dt = -tr(L) rho,
// dP/dt = -(LP + PL^T) - tr(L) P - nu (P - rho theta I), theta = tr P/(3 rho).
// Reference ODE for validating DSMC moment trajectories.
MomentsSeries bgk_moment_solve(const Moments& m0, const Deformation& def, double nu, double dt,
                               double horizon, int stride);

}  // namespace homokin::boltzmann
