#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "homokin/errors.hpp"

namespace homokin {

struct LineFit {
  double slope = 0, intercept = 0;
  double se_slope = 0;  // residual-based, lag-1-autocorrelation inflated
  std::size_t n = 0;

  double ci_low(double z = 1.96) const { return slope - z * se_slope; }
  double ci_high(double z = 1.96) const { return slope + z * se_slope; }
};

// Ordinary least squares y ~ a + b x. Residual autocorrelation (common in
// trajectory data) inflates se_slope by sqrt((1+r1)/(1-r1)).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw Error("fit_line needs >= 3 paired samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw Error("fit_line: degenerate abscissa");
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  std::vector<double> resid(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = y[i] - (f.intercept + f.slope * x[i]);
    ss += resid[i] * resid[i];
  }
  double se2 = ss / (n - 2) / sxx;
  double r1 = 0, d0 = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) r1 += resid[i] * resid[i + 1];
  for (std::size_t i = 0; i < n; ++i) d0 += resid[i] * resid[i];
  if (d0 > 0) {
    const double rho = std::fmin(0.99, std::fmax(-0.99, r1 / d0));
    se2 *= (1.0 + rho) / (1.0 - rho);
  }
  f.se_slope = std::sqrt(se2);
  return f;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace homokin
