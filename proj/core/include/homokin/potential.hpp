#pragma once

#include <cmath>
#include <string>

#include "homokin/errors.hpp"
#include "homokin/linalg.hpp"

namespace homokin {

// Radial pair potential with a cutoff; the energy is shifted so U(cutoff)=0
// (forces are untouched inside the cutoff and vanish beyond it).
struct PairPotential {
  enum class Kind { inverse_power, harmonic, truncated_lj };

  Kind kind = Kind::harmonic;
  double alpha = 0, strength = 0;  // inverse_power: strength * r^-alpha
  double k = 0, r0 = 0;            // harmonic: k/2 (r - r0)^2
  double depth = 0, sigma = 0;     // truncated_lj: 4 depth ((s/r)^12 - (s/r)^6)
  double cutoff = 0;

  static PairPotential inverse_power(double alpha, double strength, double cutoff) {
    PairPotential p;
    p.kind = Kind::inverse_power;
    p.alpha = alpha;
    p.strength = strength;
    p.cutoff = cutoff;
    return p;
  }
  static PairPotential harmonic(double k, double r0, double cutoff) {
    PairPotential p;
    p.kind = Kind::harmonic;
    p.k = k;
    p.r0 = r0;
    p.cutoff = cutoff;
    return p;
  }
  static PairPotential truncated_lj(double depth, double sigma, double cutoff) {
    PairPotential p;
    p.kind = Kind::truncated_lj;
    p.depth = depth;
    p.sigma = sigma;
    p.cutoff = cutoff;
    return p;
  }

  double raw_energy(double r) const {
    switch (kind) {
      case Kind::inverse_power:
        return strength * std::pow(r, -alpha);
      case Kind::harmonic:
        return 0.5 * k * (r - r0) * (r - r0);
      case Kind::truncated_lj: {
        const double s6 = std::pow(sigma / r, 6);
        return 4.0 * depth * (s6 * s6 - s6);
      }
    }
    return 0;
  }

  // dU/dr, unshifted
  double raw_slope(double r) const {
    switch (kind) {
      case Kind::inverse_power:
        return -alpha * strength * std::pow(r, -alpha - 1.0);
      case Kind::harmonic:
        return k * (r - r0);
      case Kind::truncated_lj: {
        const double s6 = std::pow(sigma / r, 6);
        return 4.0 * depth * (-12.0 * s6 * s6 + 6.0 * s6) / r;
      }
    }
    return 0;
  }

  double energy(double r) const {
    if (r >= cutoff) return 0.0;
    return raw_energy(r) - raw_energy(cutoff);
  }

  // magnitude of the radial force -dU/dr inside the cutoff, 0 beyond
  double radial_force(double r) const { return r >= cutoff ? 0.0 : -raw_slope(r); }

  // Force on the particle at x_i from the one at x_j, rij = x_i - x_j.
  // Throws ParticleOverlap below 1e-10 * cutoff.
  Vec3 force(const Vec3& rij) const {
    const double r = norm(rij);
    if (r >= cutoff) return {};
    if (r < 1e-10 * cutoff)
      throw ParticleOverlap("pair separation " + std::to_string(r) + " below overlap guard " +
                            std::to_string(1e-10 * cutoff));
    return (radial_force(r) / r) * rij;
  }
};

}  // namespace homokin
