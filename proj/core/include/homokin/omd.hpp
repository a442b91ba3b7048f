#pragma once

#include <array>
#include <string>
#include <vector>

#include "homokin/deformation.hpp"
#include "homokin/linalg.hpp"
#include "homokin/potential.hpp"
#include "homokin/series.hpp"

namespace homokin::omd {

// Image shells: all integer offsets nu with 0 < |nu|_inf <= extent. Image
// positions x_j + (I+tA)nu are generated on the fly, never stored.
struct LatticeSpec {
  int extent = 0;

  std::vector<std::array<int, 3>> offsets() const;  // nu != 0
};

// How pair forces are weighted: bare sums, mean-field 1/N, or the kinetic
// scaling (1/eps) grad U(r/eps) with the cutoff acting on r/eps.
struct Scaling {
  enum class Kind { unit, mean_field, boltzmann };
  Kind kind = Kind::unit;
  double epsilon = 1.0;

  static Scaling unit() { return {}; }
  static Scaling mean_field() { return {Kind::mean_field, 1.0}; }
  static Scaling boltzmann(double eps) { return {Kind::boltzmann, eps}; }
};

// Simulated particles in deformation-adapted coordinates (x, w). The original
// lab velocity of particle i is w_i + L(t) x_i.
struct ParticleSystem {
  Deformation def;
  std::vector<Vec3> x, w;
  double t = 0;

  ParticleSystem(Deformation d, std::vector<Vec3> x0, std::vector<Vec3> w0, double t0 = 0)
      : def(std::move(d)), x(std::move(x0)), w(std::move(w0)), t(t0) {}

  std::size_t size() const { return x.size(); }
  Vec3 lab_velocity(std::size_t i) const { return w[i] + def.velocity_gradient(t) * x[i]; }
};

// Net force on simulated particle i from the other simulated particles plus
// every image within the lattice extent, positions taken as xs at time tt.
Vec3 force_on(const std::vector<Vec3>& xs, double tt, const Deformation& def,
              const PairPotential& pot, const LatticeSpec& lat, std::size_t i,
              const Scaling& sc);

Vec3 total_force(const ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat,
                 std::size_t i, const Scaling& sc);

// Force at an arbitrary position x_probe whose image shells are centered at
// nu0 (the environment seen by image (tracked, nu0)); the image itself is
// excluded from the sum. With x_probe on the image manifold this reproduces
// force_on(tracked) exactly, which is what makes images redundant.
Vec3 image_environment_force(const std::vector<Vec3>& xs, double tt, const Deformation& def,
                             const PairPotential& pot, const LatticeSpec& lat, std::size_t tracked,
                             const std::array<int, 3>& nu0, const Vec3& x_probe, const Scaling& sc);

// One Strang step: exact half drift, force kick at the midpoint, exact half
// drift. The drift substep is free flight in lab coordinates, so it solves
// dx/dt = w + Lx, dw/dt = -Lw exactly (consistent with Deformation::flow_map).
void step(ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat, double dt,
          const Scaling& sc);

// Kinetic + shifted pair energy under the same scaling; conserved for A = 0.
double total_energy(const ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat,
                    const Scaling& sc);

struct ImageCheck {
  double max_position_dev = 0;
  double max_velocity_dev = 0;
};

// Integrates (a) the simulated system with the production Strang stepper and
// (b) one chosen image particle directly in lab coordinates (x, v) with its
// full force law inside an RK4 reference of the whole system, then reports
// the max-norm deviation between the direct image trajectory and the one
// generated from (a). U = 0 leaves only round-off; with forces the deviation
// is the stepper's O(dt^2).
ImageCheck image_trajectory_deviation(const ParticleSystem& initial, const PairPotential& pot,
                                      const LatticeSpec& lat, double dt, double horizon,
                                      std::size_t tracked, const std::array<int, 3>& nu0,
                                      const Scaling& sc);

// columns x1,x2,x3,w1,w2,w3
std::pair<std::vector<Vec3>, std::vector<Vec3>> load_initial_csv(const std::string& path);

// trajectory table: t,i,x1,x2,x3,w1,w2,w3
Table make_trajectory_table();
void append_snapshot(Table& table, const ParticleSystem& sys);

}  // namespace homokin::omd
