#include "homokin/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "homokin/errors.hpp"
#include "homokin/ode.hpp"
#include "homokin/stats.hpp"

namespace homokin::hydro {

double ViscosityLaw::mu(double theta) const { return mu0 * std::pow(theta, omega_exp); }

Table to_table(const HydroSeries& s) {
  Table tb;
  tb.columns = {"t", "rho", "theta"};
  for (std::size_t k = 0; k < s.t.size(); ++k) tb.append({s.t[k], s.rho[k], s.theta[k]});
  return tb;
}

HydroSeries from_table(const Table& tb) {
  HydroSeries s;
  const std::size_t it = tb.col_index("t"), ir = tb.col_index("rho"), ith = tb.col_index("theta");
  for (const auto& row : tb.rows) {
    s.t.push_back(row[it]);
    s.rho.push_back(row[ir]);
    s.theta.push_back(row[ith]);
  }
  return s;
}

double shear_heating_rate(const Deformation& def, double t) {
  const Mat3 L = def.velocity_gradient(t);
  const double tr_l = trace(L);
  const double tr_l2 = ddot(L, transpose(L));  // tr(L^2)
  const double l_dd_l = ddot(L, L);            // sum L_ij^2
  return 0.5 * (tr_l2 + l_dd_l - (2.0 / 3.0) * tr_l * tr_l);
}

HydroSeries navier_stokes_solve(const HydroState& init, const Deformation& def,
                                const ViscosityLaw& law, double dt, double horizon, int stride) {
  std::vector<double> y = {init.rho, init.theta};
  auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    const double tr_l = trace(def.velocity_gradient(t));
    ds[0] = -tr_l * s[0];
    ds[1] = -(2.0 / 3.0) * tr_l * s[1] + law.epsilon * law.mu(s[1]) * shear_heating_rate(def, t);
  };

  HydroSeries out;
  auto emit = [&](double t) {
    out.t.push_back(t);
    out.rho.push_back(y[0]);
    out.theta.push_back(y[1]);
  };
  const int steps = static_cast<int>(std::llround(horizon / dt));
  emit(0.0);
  for (int k = 1; k <= steps; ++k) {
    rk4_step(rhs, (k - 1) * dt, dt, y);
    if (k % stride == 0 || k == steps) emit(k * dt);
  }
  return out;
}

HydroSeries euler_solve(const HydroState& init, const Deformation& def, double dt, double horizon,
                        int stride) {
  return navier_stokes_solve(init, def, ViscosityLaw{1.0, 1.0, 0.0}, dt, horizon, stride);
}

ResidualSeries conservation_residual(const boltzmann::MomentsSeries& s, const Deformation& def) {
  const std::size_t n = s.t.size();
  if (n < 3) throw Error("conservation_residual: need at least 3 samples");
  const double span = s.t.back() - s.t.front();

  ResidualSeries out;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h2 = s.t[k + 1] - s.t[k - 1];
    const Mat3 L = def.velocity_gradient(s.t[k]);
    const double rate = std::max(frobenius_norm(L), 1.0 / span);
    const auto& m = s.m[k];

    const double drho = (s.m[k + 1].rho - s.m[k - 1].rho) / h2;
    const double de = (s.m[k + 1].e - s.m[k - 1].e) / h2;
    const double r1 = drho + trace(L) * m.rho;
    const double r3 = m.rho * de + ddot(m.P, L);

    out.t.push_back(s.t[k]);
    out.r1.push_back(r1 / (rate * m.rho));
    out.r3.push_back(r3 / (rate * m.rho * m.theta));
  }
  for (std::size_t k = 0; k < out.t.size(); ++k)
    out.max_normalized = std::max(out.max_normalized, std::max(std::abs(out.r1[k]), std::abs(out.r3[k])));
  return out;
}

CalibrationResult calibrate_viscosity(const boltzmann::MomentsSeries& s, const Deformation& def,
                                      double omega_exp, double epsilon, double transient_frac) {
  const std::optional<double> shear = simple_shear_rate(def.A());
  if (!shear || *shear == 0.0)
    throw InsufficientSignal("calibration needs a nonzero simple-shear deformation");
  const double shear_k = *shear;
  if (epsilon <= 0.0) throw InsufficientSignal("calibration needs epsilon > 0");
  const std::size_t n = s.t.size();
  if (n < 8) throw InsufficientSignal("series too short to calibrate");

  const double t_cut = s.t.front() + transient_frac * (s.t.back() - s.t.front());
  std::size_t start = 0;
  while (start < n && s.t[start] < t_cut) ++start;
  if (n - start < 4) throw InsufficientSignal("fit window too short after transient cut");

  double max_aniso = 0;
  for (std::size_t k = start; k < n; ++k) {
    const auto& m = s.m[k];
    const Mat3 dev = (1.0 / (m.rho * m.theta)) * m.P - Mat3::identity();
    max_aniso = std::max(max_aniso, frobenius_norm(dev));
  }
  if (max_aniso >= 0.2)
    throw NotNearEquilibrium("normalized stress deviates from identity by " +
                             std::to_string(max_aniso) + " on the fit window (limit 0.2)");

  std::vector<double> ts, ys;
  const bool log_fit = std::abs(omega_exp - 1.0) < 1e-12;
  for (std::size_t k = start; k < n; ++k) {
    ts.push_back(s.t[k]);
    ys.push_back(log_fit ? std::log(s.m[k].theta) : std::pow(s.m[k].theta, 1.0 - omega_exp));
  }
  const LineFit f = fit_line(ts, ys);
  if (std::abs(f.slope) < 2.0 * f.se_slope)
    throw InsufficientSignal("heating slope not resolved above noise");

  const double factor =
      log_fit ? 2.0 / (epsilon * shear_k * shear_k)
              : 2.0 / ((1.0 - omega_exp) * epsilon * shear_k * shear_k);

  CalibrationResult out;
  out.slope = f.slope;
  out.slope_se = f.se_slope;
  out.mu0 = factor * f.slope;
  out.mu0_se = std::abs(factor) * f.se_slope;
  out.window_start = start;
  return out;
}

}  // namespace homokin::hydro
