#pragma once

#include <cstddef>
#include <vector>

#include "homokin/boltzmann.hpp"
#include "homokin/deformation.hpp"
#include "homokin/series.hpp"

namespace homokin::hydro {

// State of the reduced hydrodynamic description: density and temperature are
// spatially uniform, with all spatial structure carried by the deformation.
struct HydroState {
  double rho = 1.0;
  double theta = 1.0;
};

// mu(theta) = mu0 * theta^omega_exp, entering the temperature equation with
// prefactor epsilon (epsilon = 0 recovers the inviscid model).
struct ViscosityLaw {
  double mu0 = 1.0;
  double omega_exp = 1.0;
  double epsilon = 0.0;

  double mu(double theta) const;
};

struct HydroSeries {
  std::vector<double> t;
  std::vector<double> rho;
  std::vector<double> theta;
};

// columns t,rho,theta
Table to_table(const HydroSeries& s);
HydroSeries from_table(const Table& t);

// Viscous shear-heating source in the temperature equation:
//   s(t) = (1/2) * ( tr(L^2) + L:L - (2/3) (tr L)^2 ),  L = L(t).
double shear_heating_rate(const Deformation& def, double t);

// Integrates rho' = -tr(L) rho,
//            theta' = -(2/3) tr(L) theta + epsilon * mu(theta) * s(t)
// with classical RK4; emits every `stride` steps plus initial and final
// states.
HydroSeries navier_stokes_solve(const HydroState& init, const Deformation& def,
                                const ViscosityLaw& law, double dt, double horizon, int stride);

// The inviscid model, run through the identical stepper with epsilon = 0 so
// the two levels agree bit for bit when the viscous term vanishes.
HydroSeries euler_solve(const HydroState& init, const Deformation& def, double dt, double horizon,
                        int stride);

// Finite-difference check of the exact balance laws on a moment series:
//   r1 = d rho/dt + tr(L) rho
//   r3 = rho de/dt + P:L
// evaluated with centered differences at interior samples. Residuals are
// reported normalized (r1 by rate*rho, r3 by rate*rho*theta) with
// rate = max(||L||_F, 1/span) so both are dimensionless and comparable
// across deformations.
struct ResidualSeries {
  std::vector<double> t;
  std::vector<double> r1;  // normalized mass residual
  std::vector<double> r3;  // normalized energy residual
  double max_normalized = 0;
};

ResidualSeries conservation_residual(const boltzmann::MomentsSeries& s, const Deformation& def);

// Fits mu0 from a simple-shear moment series under the law
// mu(theta) = mu0 theta^omega_exp: for omega_exp = 1 the model predicts
// ln theta linear in t with slope epsilon mu0 K^2 / 2; otherwise
// theta^(1-omega_exp) is linear with slope (1-omega_exp) epsilon mu0 K^2 / 2.
// The first `transient_frac` of the time span is dropped. Throws
// NotNearEquilibrium when the normalized stress strays too far from identity
// on the fit window (the closure is then not trustworthy), and
// InsufficientSignal when there is nothing to fit (no shear, epsilon = 0, or
// slope indistinguishable from noise).
struct CalibrationResult {
  double mu0 = 0;
  double mu0_se = 0;
  double slope = 0;
  double slope_se = 0;
  std::size_t window_start = 0;  // first sample index used in the fit
};

CalibrationResult calibrate_viscosity(const boltzmann::MomentsSeries& s, const Deformation& def,
                                      double omega_exp, double epsilon,
                                      double transient_frac = 0.25);

}  // namespace homokin::hydro
