#include "homokin/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "homokin/errors.hpp"

namespace homokin {
namespace {

// All real roots of c3 t^3 + c2 t^2 + c1 t + c0, Newton-polished. Closed-form
// candidates first so double roots (no sign change) are not missed.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return roots;
  const double tiny = 1e-14 * scale;

  if (std::abs(c3) <= tiny) {
    if (std::abs(c2) <= tiny) {
      if (std::abs(c1) > tiny) roots.push_back(-c0 / c1);
    } else {
      const double disc = c1 * c1 - 4.0 * c2 * c0;
      if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        // numerically stable quadratic roots
        const double q = -0.5 * (c1 + std::copysign(s, c1));
        roots.push_back(q / c2);
        if (q != 0.0) roots.push_back(c0 / q);
        else roots.push_back(-c1 / c2 - q / c2);
      } else if (disc > -1e-12 * (c1 * c1 + std::abs(4.0 * c2 * c0))) {
        roots.push_back(-c1 / (2.0 * c2));  // near-double root
      }
    }
  } else {
    // depressed cubic s^3 + ps + q with t = s - c2/(3 c3)
    const double b = c2 / c3, c = c1 / c3, d = c0 / c3;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double shift = -b / 3.0;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    const double disc_scale = 0.25 * q * q + std::abs(p * p * p) / 27.0 + 1e-300;
    if (disc > 1e-12 * disc_scale) {
      const double s = std::sqrt(disc);
      const double u = std::cbrt(-0.5 * q + s);
      const double v = std::cbrt(-0.5 * q - s);
      roots.push_back(u + v + shift);
    } else if (disc >= -1e-12 * disc_scale) {
      // repeated roots
      if (std::abs(p) < 1e-12 * (std::abs(p) + std::cbrt(std::abs(q)) + 1e-300)) {
        roots.push_back(shift);  // triple
      } else {
        roots.push_back(3.0 * q / p + shift);         // simple
        roots.push_back(-1.5 * q / p + shift);        // double
      }
    } else {
      const double r = std::sqrt(-p * p * p / 27.0);
      const double phi = std::acos(std::clamp(-0.5 * q / r, -1.0, 1.0));
      const double m = 2.0 * std::sqrt(-p / 3.0);
      for (int k = 0; k < 3; ++k)
        roots.push_back(m * std::cos((phi + 2.0 * M_PI * k) / 3.0) + shift);
    }
  }

  // polish and dedupe
  auto poly = [&](double t) { return ((c3 * t + c2) * t + c1) * t + c0; };
  auto dpoly = [&](double t) { return (3.0 * c3 * t + 2.0 * c2) * t + c1; };
  for (double& r : roots) {
    for (int it = 0; it < 50; ++it) {
      const double f = poly(r), df = dpoly(r);
      if (std::abs(df) < 1e-300) break;
      const double step = f / df;
      r -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(r))) break;
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (!std::isfinite(r)) continue;
    if (out.empty() || std::abs(r - out.back()) > 1e-9 * (1.0 + std::abs(r))) out.push_back(r);
  }
  return out;
}

}  // namespace

Deformation::Deformation(const Mat3& A) : A_(A) {
  // det(I + tA) = 1 + t tr A + t^2 I2(A) + t^3 det A,
  // I2 = ((tr A)^2 - tr A^2) / 2
  const double tr = trace(A);
  const double tr2 = trace(A * A);
  const double i2 = 0.5 * (tr * tr - tr2);
  const double d = det(A);
  double best = -1.0;
  for (double r : real_cubic_roots(d, i2, tr, 1.0))
    if (r > 1e-15 && (best < 0.0 || r < best)) best = r;
  if (best > 0.0) t_star_ = best;
}

Deformation Deformation::simple_shear(double K) {
  Mat3 A;
  A(0, 1) = K;
  return Deformation(A);
}

Mat3 Deformation::shape(double t) const { return Mat3::identity() + t * A_; }

double Deformation::jacobian_det(double t) const { return det(shape(t)); }

void Deformation::check_regular(double t) const {
  const double d = jacobian_det(t);
  if (std::abs(d) < 1e-12)
    throw SingularDeformation("deformation singular at t=" + std::to_string(t) +
                              " (det(I+tA)=" + std::to_string(d) + ")");
}

Mat3 Deformation::velocity_gradient(double t) const {
  check_regular(t);
  // L (I + tA) = A  =>  (I + tA)^T L^T = A^T
  return transpose(solve3_matrix(transpose(shape(t)), transpose(A_)));
}

Mat3 Deformation::flow_map(double t0, double t1) const {
  check_regular(t0);
  check_regular(t1);
  return solve3_matrix(shape(t1), shape(t0));
}

std::optional<double> simple_shear_rate(const Mat3& A) {
  const double K = A(0, 1);
  double off = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (!(i == 0 && j == 1)) off += std::abs(A(i, j));
  if (off > 1e-14 * std::abs(K)) return std::nullopt;
  return K;
}

}  // namespace homokin
