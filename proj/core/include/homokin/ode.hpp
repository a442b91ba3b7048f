#pragma once

#include <functional>
#include <vector>

namespace homokin {

// dy/dt = f(t, y), written into dy.
using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;

// Classical RK4. Workhorse reference integrator for the reduced ODE systems
// and for independent oracles in tests.
inline void rk4_step(const OdeRhs& f, double t, double h, std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Integrates over [t0, t1] in `steps` equal steps; `observe`, when given, is
// called after every step with (t, y) and also once for the initial state.
inline void rk4_integrate(const OdeRhs& f, double t0, double t1, int steps, std::vector<double>& y,
                          const std::function<void(double, const std::vector<double>&)>& observe = {}) {
  if (observe) observe(t0, y);
  const double h = (t1 - t0) / steps;
  for (int s = 0; s < steps; ++s) {
    rk4_step(f, t0 + s * h, h, y);
    if (observe) observe(t0 + (s + 1) * h, y);
  }
}

}  // namespace homokin
