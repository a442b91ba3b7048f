#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "homokin/deformation.hpp"
#include "homokin/errors.hpp"
#include "homokin/ode.hpp"
#include "homokin/omd.hpp"
#include "homokin/potential.hpp"
#include "homokin/rng.hpp"

using namespace homokin;

namespace {

// RK4 oracle for the interacting system in (x, w) coordinates
void rk4_reference(omd::ParticleSystem& sys, const PairPotential& pot, const omd::LatticeSpec& lat,
                   const omd::Scaling& sc, double dt, int steps) {
  const std::size_t n = sys.size();
  std::vector<double> y(6 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      y[3 * i + c] = sys.x[i][c];
      y[3 * n + 3 * i + c] = sys.w[i][c];
    }
  std::vector<Vec3> xs(n);
  auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    const Mat3 L = sys.def.velocity_gradient(t);
    for (std::size_t i = 0; i < n; ++i) xs[i] = {s[3 * i], s[3 * i + 1], s[3 * i + 2]};
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 w = {s[3 * n + 3 * i], s[3 * n + 3 * i + 1], s[3 * n + 3 * i + 2]};
      const Vec3 dx = w + L * xs[i];
      const Vec3 dw = omd::force_on(xs, t, sys.def, pot, lat, i, sc) - L * w;
      for (int c = 0; c < 3; ++c) {
        ds[3 * i + c] = dx[c];
        ds[3 * n + 3 * i + c] = dw[c];
      }
    }
  };
  for (int k = 0; k < steps; ++k) rk4_step(rhs, sys.t + k * dt, dt, y);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      sys.x[i][c] = y[3 * i + c];
      sys.w[i][c] = y[3 * n + 3 * i + c];
    }
  sys.t += steps * dt;
}

double max_state_dev(const omd::ParticleSystem& a, const omd::ParticleSystem& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, norm(a.x[i] - b.x[i]));
    d = std::max(d, norm(a.w[i] - b.w[i]));
  }
  return d;
}

}  // namespace

TEST_CASE("pair force magnitudes against hand values") {
  // inverse power r^-alpha: |f| = alpha r^-(alpha+1); alpha=2, r=2 gives 1/4
  const auto ip = PairPotential::inverse_power(2.0, 1.0, 10.0);
  const Vec3 f = ip.force({2.0, 0.0, 0.0});
  CHECK(f.x == doctest::Approx(0.25).epsilon(1e-14));  // repulsive, along +x
  CHECK(f.y == 0.0);
  CHECK(norm(f) == doctest::Approx(2.0 * std::pow(2.0, -3.0)).epsilon(1e-14));

  // harmonic force vanishes at the rest length and pulls back beyond it
  const auto h = PairPotential::harmonic(3.0, 1.5, 10.0);
  CHECK(norm(h.force({1.5, 0, 0})) < 1e-14);
  CHECK(h.force({2.0, 0, 0}).x == doctest::Approx(-3.0 * 0.5).epsilon(1e-13));

  // truncated LJ turns over at 2^(1/6) sigma
  const auto lj = PairPotential::truncated_lj(1.0, 1.0, 3.0);
  const double rmin = std::pow(2.0, 1.0 / 6.0);
  CHECK(norm(lj.force({rmin, 0, 0})) < 1e-12);
  CHECK(lj.force({0.9, 0, 0}).x > 0.0);   // inside: repulsive
  CHECK(lj.force({1.5, 0, 0}).x < 0.0);   // outside: attractive
}

TEST_CASE("potential energy is shifted to vanish at the cutoff") {
  for (const auto& pot : {PairPotential::inverse_power(3.0, 0.7, 2.0),
                          PairPotential::harmonic(2.0, 0.5, 2.0),
                          PairPotential::truncated_lj(0.8, 0.9, 2.0)}) {
    CHECK(pot.energy(2.0) == 0.0);
    CHECK(pot.energy(2.5) == 0.0);
    CHECK(std::abs(pot.energy(2.0 - 1e-9)) < 1e-7);  // continuous from inside
    CHECK(pot.radial_force(2.1) == 0.0);
  }
}

TEST_CASE("force is the negative gradient of the shifted energy") {
  CounterRng rng(41, 0x0a3d1);
  const auto pots = {PairPotential::inverse_power(2.5, 1.3, 4.0),
                     PairPotential::harmonic(2.0, 1.0, 4.0),
                     PairPotential::truncated_lj(1.1, 0.8, 4.0)};
  for (const auto& pot : pots) {
    for (int trial = 0; trial < 10; ++trial) {
      const double r = rng.uniform(0.7, 3.5);
      const double h = 1e-6;
      const double fd = -(pot.energy(r + h) - pot.energy(r - h)) / (2.0 * h);
      CHECK(pot.radial_force(r) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("overlap guard") {
  const auto pot = PairPotential::harmonic(1.0, 0.0, 1.0);
  CHECK_THROWS_AS((void)pot.force({1e-11, 0, 0}), ParticleOverlap);
  (void)pot.force({1e-9, 0, 0});  // just above the guard: fine
}

TEST_CASE("kinetic scaling matches a finite-difference gradient of the scaled energy") {
  // force = (1/eps^2) f_unit(r/eps) is minus the gradient of (1/eps) U(r/eps)
  const auto pot = PairPotential::inverse_power(2.0, 1.0, 3.0);
  const double eps = 0.37;
  const auto sc = omd::Scaling::boltzmann(eps);
  const Deformation def(Mat3::zero());
  const omd::LatticeSpec lat{0};

  const Vec3 xj = {0.0, 0.0, 0.0};
  for (double r : {0.4, 0.7, 1.0}) {
    std::vector<Vec3> xs = {{r, 0.0, 0.0}, xj};
    const Vec3 f = omd::force_on(xs, 0.0, def, pot, lat, 0, sc);
    const double h = 1e-6;
    auto scaled_energy = [&](double rr) { return pot.energy(rr / eps) / eps; };
    const double fd = -(scaled_energy(r + h) - scaled_energy(r - h)) / (2.0 * h);
    CHECK(f.x == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("mean-field scaling divides the bare force by N") {
  CounterRng rng(43, 0x0a3d2);
  const auto pot = PairPotential::harmonic(1.0, 0.5, 3.0);
  const Deformation def(Mat3::zero());
  const omd::LatticeSpec lat{0};
  std::vector<Vec3> xs(8);
  for (auto& x : xs) x = rng.normal3(0.6);
  const Vec3 bare = omd::force_on(xs, 0.0, def, pot, lat, 2, omd::Scaling::unit());
  const Vec3 mf = omd::force_on(xs, 0.0, def, pot, lat, 2, omd::Scaling::mean_field());
  CHECK(norm(mf - (1.0 / 8.0) * bare) < 1e-14);
}

TEST_CASE("image shells cancel for a single particle in a symmetric lattice") {
  // every image at +nu pairs with one at -nu; the shifted differences are
  // opposite, so the net force vanishes even under deformation
  const auto pot = PairPotential::inverse_power(2.0, 1.0, 5.0);
  const Deformation def = Deformation::simple_shear(0.9);
  const omd::LatticeSpec lat{2};
  std::vector<Vec3> xs = {{0.0, 0.0, 0.0}};
  for (double t : {0.0, 0.7}) {
    const Vec3 f = omd::force_on(xs, t, def, pot, lat, 0, omd::Scaling::unit());
    CHECK(norm(f) < 1e-12);
  }
}

TEST_CASE("image environment force reproduces the simulated force on the manifold") {
  CounterRng rng(47, 0x0a3d3);
  const auto pot = PairPotential::harmonic(1.0, 0.4, 1.2);
  const Deformation def = Deformation::simple_shear(1.0);
  const omd::LatticeSpec lat{1};
  std::vector<Vec3> xs = {{0.1, 0.2, -0.05}, {0.45, 0.3, 0.2}, {-0.2, -0.3, 0.4}};
  const double t = 0.6;
  // probe at the tracked particle itself with nu0 = 0: identical sum
  const Vec3 direct = omd::force_on(xs, t, def, pot, lat, 1, omd::Scaling::unit());
  const Vec3 via_env =
      omd::image_environment_force(xs, t, def, pot, lat, 1, {0, 0, 0}, xs[1], omd::Scaling::unit());
  CHECK(norm(direct - via_env) < 1e-13);

  // probe at a shifted image: same force as the center particle would feel
  // if the entire lattice were re-centered, by construction of the shells
  const std::array<int, 3> nu0 = {1, 0, 0};
  const Vec3 x_img = xs[1] + def.shape(t) * Vec3{1, 0, 0};
  const Vec3 f_img =
      omd::image_environment_force(xs, t, def, pot, lat, 1, nu0, x_img, omd::Scaling::unit());
  CHECK(std::isfinite(norm(f_img)));
}

TEST_CASE("free flight under simple shear: frozen endpoint") {
  // U = 0, K = 1, w0 = (0,1,0), x0 = 0: lab velocity is constant (0,1,0), so
  // x(1) = (0,1,0) and w(1) = v - L x = (0,1,0) - (1,0,0) = (-1,1,0)
  const Deformation def = Deformation::simple_shear(1.0);
  omd::ParticleSystem sys(def, {{0, 0, 0}}, {{0, 1, 0}});
  const auto pot = PairPotential::harmonic(0.0, 0.0, 0.0);  // cutoff 0: no forces
  const omd::LatticeSpec lat{0};
  for (int k = 0; k < 100; ++k) omd::step(sys, pot, lat, 0.01, omd::Scaling::unit());
  CHECK(sys.x[0].x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sys.x[0].y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sys.w[0].x == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sys.w[0].y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sys.w[0].z) < 1e-14);
}

TEST_CASE("drift substeps are exact: U = 0 matches the two-time propagator") {
  CounterRng rng(53, 0x0a3d4);
  const auto pot = PairPotential::harmonic(0.0, 0.0, 0.0);
  const omd::LatticeSpec lat{0};
  for (int trial = 0; trial < 10; ++trial) {
    Mat3 a;
    for (std::size_t i = 0; i < 9; ++i) a.m[i] = rng.uniform(-0.8, 0.8);
    const Deformation def(a);
    double horizon = 0.8;
    if (def.singular_time()) horizon = std::min(horizon, 0.7 * *def.singular_time());

    const int n = 16;
    std::vector<Vec3> xs(n), ws(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = rng.normal3(1.0);
      ws[i] = rng.normal3(1.0);
    }
    omd::ParticleSystem sys(def, xs, ws);
    const int steps = 200;
    for (int k = 0; k < steps; ++k) omd::step(sys, pot, lat, horizon / steps, omd::Scaling::unit());

    // x is free flight in the lab frame; w is the lab velocity re-identified
    // at the final time, which for pure drift equals the two-time propagator
    // applied to w0
    const Mat3 M = def.flow_map(0.0, horizon);
    const Mat3 Lt = def.velocity_gradient(horizon);
    for (int i = 0; i < n; ++i) {
      const Vec3 v0 = ws[i] + def.A() * xs[i];
      const Vec3 xt = xs[i] + horizon * v0;
      const Vec3 wt = v0 - Lt * xt;
      CHECK(norm(sys.x[i] - xt) < 1e-10);
      CHECK(norm(sys.w[i] - wt) < 1e-10);
      CHECK(norm(M * ws[i] - wt) < 1e-9);
    }
  }
}

TEST_CASE("interacting run matches an RK4 oracle at second order") {
  const auto pot = PairPotential::harmonic(2.0, 0.0, 0.6);  // repulsive core, C1 at cutoff
  const Deformation def = Deformation::simple_shear(1.0);
  const omd::LatticeSpec lat{1};
  std::vector<Vec3> xs = {{0.1, 0.2, -0.05}, {0.45, 0.3, 0.2}};
  std::vector<Vec3> ws = {{0.05, -0.02, 0.03}, {-0.04, 0.01, -0.02}};
  const auto sc = omd::Scaling::unit();
  const double horizon = 0.5;

  auto deviation_at = [&](double dt) {
    omd::ParticleSystem strang(def, xs, ws);
    omd::ParticleSystem ref(def, xs, ws);
    const int steps = static_cast<int>(std::llround(horizon / dt));
    for (int k = 0; k < steps; ++k) omd::step(strang, pot, lat, dt, sc);
    rk4_reference(ref, pot, lat, sc, dt / 4.0, 4 * steps);  // finer oracle
    return max_state_dev(strang, ref);
  };

  const double d1 = deviation_at(4e-3);
  const double d2 = deviation_at(2e-3);
  CHECK(d1 < 1e-4);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.45));  // second order
}

TEST_CASE("energy conservation without deformation, second-order drift") {
  const auto pot = PairPotential::harmonic(1.0, 0.8, 2.0);
  const Deformation def(Mat3::zero());
  const omd::LatticeSpec lat{0};
  std::vector<Vec3> xs = {{0.0, 0, 0}, {1.0, 0, 0}, {0.4, 0.9, 0}};
  std::vector<Vec3> ws = {{0.1, 0.2, 0}, {-0.1, 0.1, 0.2}, {0, -0.3, 0.1}};
  const auto sc = omd::Scaling::unit();

  auto drift_at = [&](double dt) {
    omd::ParticleSystem sys(def, xs, ws);
    const double e0 = omd::total_energy(sys, pot, lat, sc);
    double worst = 0;
    const int steps = static_cast<int>(std::llround(2.0 / dt));
    for (int k = 0; k < steps; ++k) {
      omd::step(sys, pot, lat, dt, sc);
      worst = std::max(worst, std::abs(omd::total_energy(sys, pot, lat, sc) - e0));
    }
    return worst;
  };

  const double e1 = drift_at(2e-3);
  const double e2 = drift_at(1e-3);
  CHECK(e1 < 1e-5);
  CHECK(e1 / e2 > 2.5);
  CHECK(e1 / e2 < 6.0);
}

TEST_CASE("image trajectory deviation: pure drift leaves round-off only") {
  const Deformation def = Deformation::simple_shear(1.0);
  const auto pot = PairPotential::harmonic(0.0, 0.0, 0.0);
  omd::ParticleSystem sys(def, {{0.1, 0.2, 0.3}, {-0.2, 0.4, 0.0}},
                          {{0.3, -0.1, 0.2}, {0.1, 0.1, -0.3}});
  const auto chk = omd::image_trajectory_deviation(sys, pot, {1}, 1e-2, 1.0, 0, {1, 0, 0},
                                                   omd::Scaling::unit());
  CHECK(chk.max_position_dev < 1e-10);
  CHECK(chk.max_velocity_dev < 1e-10);
}

TEST_CASE("image trajectory deviation: interacting case is second order") {
  const Deformation def = Deformation::simple_shear(1.0);
  const auto pot = PairPotential::harmonic(2.0, 0.0, 0.6);
  const omd::LatticeSpec lat{1};
  omd::ParticleSystem sys(def, {{0.1, 0.2, -0.05}, {0.45, 0.3, 0.2}},
                          {{0.05, -0.02, 0.03}, {-0.04, 0.01, -0.02}});
  const auto sc = omd::Scaling::unit();

  const auto c1 = omd::image_trajectory_deviation(sys, pot, lat, 2e-3, 0.25, 0, {1, 0, 0}, sc);
  const auto c2 = omd::image_trajectory_deviation(sys, pot, lat, 1e-3, 0.25, 0, {1, 0, 0}, sc);
  const double d1 = std::max(c1.max_position_dev, c1.max_velocity_dev);
  const double d2 = std::max(c2.max_position_dev, c2.max_velocity_dev);
  CHECK(d1 > 1e-13);  // forces actually acted
  CHECK(d1 < 1e-6);
  CHECK(d1 / d2 > 2.5);
  CHECK(d1 / d2 < 6.0);
}

TEST_CASE("total energy agrees with a hand-summed two-particle value") {
  const auto pot = PairPotential::harmonic(2.0, 0.5, 2.0);
  const Deformation def(Mat3::zero());
  omd::ParticleSystem sys(def, {{0, 0, 0}, {1.0, 0, 0}}, {{0.5, 0, 0}, {0, 0.5, 0}});
  const double kin = 0.5 * 0.25 + 0.5 * 0.25;
  const double pot_e = 0.5 * 2.0 * 0.25 - 0.5 * 2.0 * (2.0 - 0.5) * (2.0 - 0.5);
  const double expect = kin + pot_e;
  CHECK(omd::total_energy(sys, pot, {0}, omd::Scaling::unit()) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("initial-condition CSV loader") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "homokin_omd_test";
  fs::create_directories(dir);
  const std::string path = (dir / "init.csv").string();
  {
    std::ofstream os(path);
    os << "x1,x2,x3,w1,w2,w3\n";
    os << "0.1,0.2,0.3,-1,0,1\n";
    os << "1,2,3,4,5,6\n";
  }
  const auto [xs, ws] = omd::load_initial_csv(path);
  REQUIRE(xs.size() == 2);
  CHECK(xs[0].x == 0.1);
  CHECK(ws[0].x == -1.0);
  CHECK(ws[1].z == 6.0);

  {
    std::ofstream os(path);
    os << "x1,x2,x3,w1,w2,w3\n";
    os << "0.1,0.2\n";  // short row
  }
  CHECK_THROWS_AS((void)omd::load_initial_csv(path), Error);
  fs::remove_all(dir);
}
