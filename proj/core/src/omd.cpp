#include "homokin/omd.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "homokin/errors.hpp"
#include "homokin/ode.hpp"

namespace homokin::omd {
namespace {

Vec3 to_vec(const std::array<int, 3>& nu) {
  return {static_cast<double>(nu[0]), static_cast<double>(nu[1]), static_cast<double>(nu[2])};
}

// single pair contribution under the chosen scaling (mean-field 1/N applied
// by the caller)
Vec3 pair_force(const PairPotential& pot, const Vec3& rij, const Scaling& sc) {
  if (sc.kind == Scaling::Kind::boltzmann) {
    const double inv_eps = 1.0 / sc.epsilon;
    return (inv_eps * inv_eps) * pot.force(inv_eps * rij);
  }
  return pot.force(rij);
}

double pair_energy(const PairPotential& pot, double r, const Scaling& sc) {
  if (sc.kind == Scaling::Kind::boltzmann) return pot.energy(r / sc.epsilon) / sc.epsilon;
  return pot.energy(r);
}

double force_prefactor(const Scaling& sc, std::size_t n) {
  return sc.kind == Scaling::Kind::mean_field ? 1.0 / static_cast<double>(n) : 1.0;
}

}  // namespace

std::vector<std::array<int, 3>> LatticeSpec::offsets() const {
  std::vector<std::array<int, 3>> out;
  for (int a = -extent; a <= extent; ++a)
    for (int b = -extent; b <= extent; ++b)
      for (int c = -extent; c <= extent; ++c)
        if (a || b || c) out.push_back({a, b, c});
  return out;
}

Vec3 force_on(const std::vector<Vec3>& xs, double tt, const Deformation& def,
              const PairPotential& pot, const LatticeSpec& lat, std::size_t i,
              const Scaling& sc) {
  if (pot.cutoff <= 0) return {};
  const Mat3 S = def.shape(tt);
  const Vec3 xi = xs[i];
  Vec3 f{};
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (j != i) f += pair_force(pot, xi - xs[j], sc);
  for (const auto& nu : lat.offsets()) {
    const Vec3 shift = S * to_vec(nu);
    for (std::size_t j = 0; j < xs.size(); ++j) f += pair_force(pot, xi - xs[j] - shift, sc);
  }
  return force_prefactor(sc, xs.size()) * f;
}

Vec3 total_force(const ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat,
                 std::size_t i, const Scaling& sc) {
  return force_on(sys.x, sys.t, sys.def, pot, lat, i, sc);
}

Vec3 image_environment_force(const std::vector<Vec3>& xs, double tt, const Deformation& def,
                             const PairPotential& pot, const LatticeSpec& lat, std::size_t tracked,
                             const std::array<int, 3>& nu0, const Vec3& x_probe,
                             const Scaling& sc) {
  const Mat3 S = def.shape(tt);
  Vec3 f{};
  // nu = nu0 shell first so the summation order matches force_on's nu = 0 term
  {
    const Vec3 shift = S * to_vec(nu0);
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (j != tracked) f += pair_force(pot, x_probe - xs[j] - shift, sc);
  }
  for (const auto& d : lat.offsets()) {
    const std::array<int, 3> nu = {nu0[0] + d[0], nu0[1] + d[1], nu0[2] + d[2]};
    const Vec3 shift = S * to_vec(nu);
    for (std::size_t j = 0; j < xs.size(); ++j) f += pair_force(pot, x_probe - xs[j] - shift, sc);
  }
  return force_prefactor(sc, xs.size()) * f;
}

void step(ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat, double dt,
          const Scaling& sc) {
  const std::size_t n = sys.size();
  const double h = 0.5 * dt;
  const double t0 = sys.t;

  // half drift: free flight in lab velocity v = w + L x
  const Mat3 L0 = sys.def.velocity_gradient(t0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = sys.w[i] + L0 * sys.x[i];
    sys.x[i] += h * v;
    sys.w[i] = v;  // temporarily stores v
  }
  const Mat3 Lh = sys.def.velocity_gradient(t0 + h);
  for (std::size_t i = 0; i < n; ++i) sys.w[i] -= Lh * sys.x[i];

  // kick with all positions frozen at the midpoint
  if (pot.cutoff > 0) {
    std::vector<Vec3> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = force_on(sys.x, t0 + h, sys.def, pot, lat, i, sc);
    for (std::size_t i = 0; i < n; ++i) sys.w[i] += dt * f[i];
  }

  // half drift to t0 + dt
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = sys.w[i] + Lh * sys.x[i];
    sys.x[i] += h * v;
    sys.w[i] = v;
  }
  const Mat3 L1 = sys.def.velocity_gradient(t0 + dt);
  for (std::size_t i = 0; i < n; ++i) sys.w[i] -= L1 * sys.x[i];

  sys.t = t0 + dt;
}

double total_energy(const ParticleSystem& sys, const PairPotential& pot, const LatticeSpec& lat,
                    const Scaling& sc) {
  const std::size_t n = sys.size();
  double kin = 0;
  for (std::size_t i = 0; i < n; ++i) kin += 0.5 * norm2(sys.w[i]);
  double pot_e = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      pot_e += pair_energy(pot, norm(sys.x[i] - sys.x[j]), sc);
  const Mat3 S = sys.def.shape(sys.t);
  for (const auto& nu : lat.offsets()) {
    const Vec3 shift = S * to_vec(nu);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        pot_e += 0.5 * pair_energy(pot, norm(sys.x[i] - sys.x[j] - shift), sc);
  }
  return kin + force_prefactor(sc, n) * pot_e;
}

ImageCheck image_trajectory_deviation(const ParticleSystem& initial, const PairPotential& pot,
                                      const LatticeSpec& lat, double dt, double horizon,
                                      std::size_t tracked, const std::array<int, 3>& nu0,
                                      const Scaling& sc) {
  const std::size_t n = initial.size();
  const Deformation& def = initial.def;
  const int steps = static_cast<int>(std::llround(horizon / dt));

  // (b): reference RK4 system of all simulated particles in (x, w) plus the
  // chosen image directly in lab coordinates (x, v)
  std::vector<double> y(6 * n + 6);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      y[3 * i + c] = initial.x[i][c];
      y[3 * n + 3 * i + c] = initial.w[i][c];
    }
  {
    const Mat3 L = def.velocity_gradient(initial.t);
    const Vec3 xi = initial.x[tracked] + def.shape(initial.t) * to_vec(nu0);
    const Vec3 vi = initial.w[tracked] + L * xi;  // w identification at t0
    for (int c = 0; c < 3; ++c) {
      y[6 * n + c] = xi[c];
      y[6 * n + 3 + c] = vi[c];
    }
  }

  std::vector<Vec3> xs(n);
  auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    const Mat3 L = def.velocity_gradient(t);
    for (std::size_t i = 0; i < n; ++i) xs[i] = {s[3 * i], s[3 * i + 1], s[3 * i + 2]};
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 w = {s[3 * n + 3 * i], s[3 * n + 3 * i + 1], s[3 * n + 3 * i + 2]};
      const Vec3 dx = w + L * xs[i];
      const Vec3 dw = force_on(xs, t, def, pot, lat, i, sc) - L * w;
      for (int c = 0; c < 3; ++c) {
        ds[3 * i + c] = dx[c];
        ds[3 * n + 3 * i + c] = dw[c];
      }
    }
    const Vec3 xi = {s[6 * n], s[6 * n + 1], s[6 * n + 2]};
    const Vec3 vi = {s[6 * n + 3], s[6 * n + 4], s[6 * n + 5]};
    const Vec3 fi = image_environment_force(xs, t, def, pot, lat, tracked, nu0, xi, sc);
    for (int c = 0; c < 3; ++c) {
      ds[6 * n + c] = vi[c];
      ds[6 * n + 3 + c] = fi[c];
    }
  };

  // (a): production stepper
  ParticleSystem sys = initial;

  ImageCheck out;
  auto record = [&](double t) {
    const Mat3 S = def.shape(t);
    const Mat3 L = def.velocity_gradient(t);
    const Vec3 x_gen = sys.x[tracked] + S * to_vec(nu0);
    const Vec3 v_gen = sys.w[tracked] + L * x_gen;
    const Vec3 x_dir = {y[6 * n], y[6 * n + 1], y[6 * n + 2]};
    const Vec3 v_dir = {y[6 * n + 3], y[6 * n + 4], y[6 * n + 5]};
    out.max_position_dev = std::max(out.max_position_dev, norm(x_dir - x_gen));
    out.max_velocity_dev = std::max(out.max_velocity_dev, norm(v_dir - v_gen));
  };

  record(initial.t);
  for (int k = 0; k < steps; ++k) {
    const double t = initial.t + k * dt;
    rk4_step(rhs, t, dt, y);
    step(sys, pot, lat, dt, sc);
    record(t + dt);
  }
  return out;
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> load_initial_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error("empty initial-condition file " + path);
  std::vector<Vec3> xs, ws;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    double v[6];
    int k = 0;
    while (std::getline(ss, tok, ',') && k < 6) v[k++] = std::stod(tok);
    if (k != 6) throw Error("bad row in " + path + ": expected 6 columns");
    xs.push_back({v[0], v[1], v[2]});
    ws.push_back({v[3], v[4], v[5]});
  }
  return {std::move(xs), std::move(ws)};
}

Table make_trajectory_table() {
  Table t;
  t.columns = {"t", "i", "x1", "x2", "x3", "w1", "w2", "w3"};
  return t;
}

void append_snapshot(Table& table, const ParticleSystem& sys) {
  for (std::size_t i = 0; i < sys.size(); ++i)
    table.append({sys.t, static_cast<double>(i), sys.x[i].x, sys.x[i].y, sys.x[i].z,
                  sys.w[i].x, sys.w[i].y, sys.w[i].z});
}

}  // namespace homokin::omd
