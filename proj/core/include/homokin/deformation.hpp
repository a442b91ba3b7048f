#pragma once

#include <optional>

#include "homokin/linalg.hpp"

namespace homokin {

// Affine background deformation x -> (I + tA) x. All macroscopic coupling
// enters through the velocity gradient L(t) = A (I + tA)^-1 and the two-time
// propagator of dw/dt = -L(t) w. Valid strictly before the first positive
// zero of det(I + tA).
class Deformation {
 public:
  explicit Deformation(const Mat3& A);

  static Deformation simple_shear(double K);

  const Mat3& A() const { return A_; }

  // I + tA
  Mat3 shape(double t) const;

  // det(I + tA); also the factor by which the co-moving cell volume grows.
  double jacobian_det(double t) const;

  // L(t) = A (I + tA)^-1. Throws SingularDeformation when |det(I+tA)| < 1e-12.
  Mat3 velocity_gradient(double t) const;

  // M(t0, t1) = (I + t1 A)^-1 (I + t0 A), the exact propagator of
  // dw/dt = -L(t) w from t0 to t1. Composes: M(t1,t2) M(t0,t1) = M(t0,t2).
  Mat3 flow_map(double t0, double t1) const;

  // Earliest t > 0 with det(I + tA) = 0, if any (double roots included).
  std::optional<double> singular_time() const { return t_star_; }

 private:
  void check_regular(double t) const;

  Mat3 A_;
  std::optional<double> t_star_;
};

// K when A is the canonical simple-shear matrix (only entry A12 = K may be
// nonzero), nullopt otherwise.  The zero matrix yields K = 0.
std::optional<double> simple_shear_rate(const Mat3& A);

}  // namespace homokin
