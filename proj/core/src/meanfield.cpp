#include "homokin/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "homokin/errors.hpp"
#include "homokin/ode.hpp"
#include "homokin/omd.hpp"
#include "homokin/stats.hpp"

namespace homokin::meanfield {

Vec3 mean_force(const measure::EmpiricalMeasure& g, const PairPotential& pot, const Vec3& X) {
  Vec3 f{};
  for (std::size_t j = 0; j < g.size(); ++j) f += g.weights[j] * pot.force(X - g.points[j].x);
  return f;
}

std::vector<CharacteristicPoint> integrate_characteristic(const Deformation& def,
                                                          const PairPotential& pot,
                                                          const MeasurePath& path, Vec3 X0, Vec3 W0,
                                                          double t0, double dt, double horizon) {
  std::vector<double> y = {X0.x, X0.y, X0.z, W0.x, W0.y, W0.z};
  auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    const Mat3 L = def.velocity_gradient(t);
    const Vec3 X = {s[0], s[1], s[2]}, W = {s[3], s[4], s[5]};
    const Vec3 dX = W + L * X;
    const Vec3 dW = mean_force(path(t), pot, X) - L * W;
    ds = {dX.x, dX.y, dX.z, dW.x, dW.y, dW.z};
  };
  std::vector<CharacteristicPoint> out;
  const int steps = static_cast<int>(std::llround(horizon / dt));
  rk4_integrate(rhs, t0, t0 + horizon, steps, y, [&](double t, const std::vector<double>& s) {
    out.push_back({t, {s[0], s[1], s[2]}, {s[3], s[4], s[5]}});
  });
  return out;
}

measure::EmpiricalMeasure transport_pushforward(const measure::EmpiricalMeasure& g0,
                                                const Deformation& def, double t) {
  g0.validate();
  const Mat3 M = def.flow_map(0.0, t);
  measure::EmpiricalMeasure g = g0;
  for (auto& p : g.points) p.w = M * p.w;
  return g;
}

double transported_density(const std::function<double(const Vec3&)>& g0, const Deformation& def,
                           double t, const Vec3& w) {
  return g0(def.shape(t) * w);
}

PhasePoint exact_phase_flow(const Deformation& def, const PhasePoint& p0, double t) {
  const Vec3 v0 = p0.w + def.A() * p0.x;  // L(0) = A
  const Vec3 xt = p0.x + t * v0;
  return {xt, v0 - def.velocity_gradient(t) * xt};
}

namespace {

struct Box {
  Vec3 lo, hi;
  Vec3 sample(CounterRng& rng) const {
    return {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)};
  }
};

// support bounding box inflated 1.5x plus an absolute margin
std::pair<Box, Box> probe_boxes(const measure::EmpiricalMeasure& g) {
  Vec3 xlo = g.points[0].x, xhi = xlo, wlo = g.points[0].w, whi = wlo;
  for (const auto& p : g.points)
    for (int c = 0; c < 3; ++c) {
      xlo[c] = std::min(xlo[c], p.x[c]);
      xhi[c] = std::max(xhi[c], p.x[c]);
      wlo[c] = std::min(wlo[c], p.w[c]);
      whi[c] = std::max(whi[c], p.w[c]);
    }
  auto inflate = [](Vec3 lo, Vec3 hi) {
    Box b;
    for (int c = 0; c < 3; ++c) {
      const double mid = 0.5 * (lo[c] + hi[c]);
      const double half = 0.75 * (hi[c] - lo[c]) + 0.5;
      b.lo[c] = mid - half;
      b.hi[c] = mid + half;
    }
    return b;
  };
  return {inflate(xlo, xhi), inflate(wlo, whi)};
}

}  // namespace

FieldHypothesisReport measure_field_constants(const Deformation& def, const PairPotential& pot,
                                              const measure::EmpiricalMeasure& g, double t_lo,
                                              double t_hi, std::uint64_t seed, int n_samples) {
  g.validate();
  auto [bx, bw] = probe_boxes(g);
  CounterRng rng(seed, 0xf1e1d);
  FieldHypothesisReport rep;

  auto xi = [&](const Mat3& L, const PhasePoint& P) -> PhasePoint {
    return {P.w + L * P.x, -(L * P.w)};
  };
  auto interaction = [&](const measure::EmpiricalMeasure& gg, const PhasePoint& P) -> PhasePoint {
    return {{0, 0, 0}, -1.0 * mean_force(gg, pot, P.x)};
  };

  // W1 perturbation: every atom shifted in x by delta, so W1(g, g') <= delta
  const double span = std::max({bx.hi.x - bx.lo.x, bx.hi.y - bx.lo.y, bx.hi.z - bx.lo.z, 1e-6});
  const double delta = 1e-3 * span;
  measure::EmpiricalMeasure g_shift = g;
  for (auto& p : g_shift.points) {
    const Vec3 d = rng.unit_sphere();
    p.x += delta * d;
  }

  for (int s = 0; s < n_samples; ++s) {
    const double t = rng.uniform(t_lo, t_hi);
    const Mat3 L = def.velocity_gradient(t);
    const PhasePoint P = {bx.sample(rng), bw.sample(rng)};
    // a far partner and a nearby one (derivative probe)
    PhasePoint Q = {bx.sample(rng), bw.sample(rng)};
    if (s % 2) {
      const double h = 1e-3 * span;
      Q = P;
      Q.x += h * rng.unit_sphere();
      Q.w += h * rng.unit_sphere();
    }

    const PhasePoint xiP = xi(L, P), xiQ = xi(L, Q);
    const PhasePoint HP = interaction(g, P), HQ = interaction(g, Q);
    const PhasePoint HsP = interaction(g_shift, P);

    const double npP = 1.0 + phase_norm(P);
    rep.C_xi = std::max(rep.C_xi, phase_norm(xiP) / npP);
    rep.C_H = std::max(rep.C_H, phase_norm(HP) / npP);
    rep.C_P = std::max(rep.C_P, std::sqrt(norm2(xiP.x + HP.x) + norm2(xiP.w + HP.w)) / npP);

    const double dPQ = phase_dist(P, Q);
    if (dPQ > 1e-12) {
      rep.L_xi = std::max(rep.L_xi, phase_dist(xiP, xiQ) / dPQ);
      rep.L_H = std::max(rep.L_H, phase_dist(HP, HQ) / dPQ);
      const PhasePoint PsiP = {xiP.x + HP.x, xiP.w + HP.w};
      const PhasePoint PsiQ = {xiQ.x + HQ.x, xiQ.w + HQ.w};
      rep.L_P = std::max(rep.L_P, phase_dist(PsiP, PsiQ) / dPQ);
    }
    rep.L_w1 = std::max(rep.L_w1, phase_dist(HP, HsP) / delta);
  }
  return rep;
}

namespace {

omd::ParticleSystem system_from(const measure::EmpiricalMeasure& g, const Deformation& def) {
  std::vector<Vec3> xs, ws;
  xs.reserve(g.size());
  ws.reserve(g.size());
  for (const auto& p : g.points) {
    xs.push_back(p.x);
    ws.push_back(p.w);
  }
  return omd::ParticleSystem(def, std::move(xs), std::move(ws));
}

measure::EmpiricalMeasure measure_from(const omd::ParticleSystem& sys) {
  std::vector<PhasePoint> pts(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) pts[i] = {sys.x[i], sys.w[i]};
  return measure::EmpiricalMeasure::uniform(std::move(pts));
}

}  // namespace

StabilityReport stability_check(const measure::EmpiricalMeasure& g0,
                                const measure::EmpiricalMeasure& h0, const Deformation& def,
                                const PairPotential& pot, double dt, double horizon, int n_checks,
                                std::uint64_t seed) {
  g0.validate();
  h0.validate();
  if (g0.size() != h0.size())
    throw UnsupportedMeasure("stability_check needs equal sizes, got " +
                             std::to_string(g0.size()) + " and " + std::to_string(h0.size()));

  omd::ParticleSystem sys_g = system_from(g0, def), sys_h = system_from(h0, def);
  const omd::LatticeSpec lat{0};
  const omd::Scaling sc = omd::Scaling::mean_field();

  StabilityReport rep;
  rep.w1_initial = measure::w1_exact(g0, h0);
  rep.degenerate = rep.w1_initial < 1e-14;

  auto track_constants = [&](const measure::EmpiricalMeasure& g, double t_lo, double t_hi,
                             std::uint64_t salt) {
    const auto c = measure_field_constants(def, pot, g, t_lo, t_hi, seed ^ salt, 256);
    rep.L = std::max({rep.L, c.stability_L()});
  };
  track_constants(g0, 0.0, horizon / n_checks, 1);
  track_constants(h0, 0.0, horizon / n_checks, 2);

  const int steps = static_cast<int>(std::llround(horizon / dt));
  const int stride = std::max(1, steps / n_checks);
  for (int k = 1; k <= steps; ++k) {
    omd::step(sys_g, pot, lat, dt, sc);
    omd::step(sys_h, pot, lat, dt, sc);
    if (k % stride == 0 || k == steps) {
      const auto gm = measure_from(sys_g), hm = measure_from(sys_h);
      const double t = sys_g.t;
      rep.w1_at.emplace_back(t, measure::w1_exact(gm, hm));
      track_constants(gm, std::max(0.0, t - stride * dt), std::min(horizon, t + stride * dt),
                      3 + static_cast<std::uint64_t>(k));
      track_constants(hm, std::max(0.0, t - stride * dt), std::min(horizon, t + stride * dt),
                      1000 + static_cast<std::uint64_t>(k));
    }
  }

  for (const auto& [t, w1] : rep.w1_at) {
    rep.max_w1 = std::max(rep.max_w1, w1);
    if (!rep.degenerate)
      rep.max_ratio = std::max(rep.max_ratio, w1 / (std::exp(2.0 * t * rep.L) * rep.w1_initial));
  }
  return rep;
}

PhasePoint sample(const GaussianSpec& spec, CounterRng& rng) {
  return {spec.mean_x + rng.normal3(spec.sigma_x), spec.mean_w + rng.normal3(spec.sigma_w)};
}

measure::EmpiricalMeasure sample_cloud(const GaussianSpec& spec, int n, CounterRng& rng) {
  std::vector<PhasePoint> pts(n);
  for (auto& p : pts) p = sample(spec, rng);
  return measure::EmpiricalMeasure::uniform(std::move(pts));
}

ConvergenceSummary convergence_study(const Deformation& def, const GaussianSpec& spec,
                                     const std::vector<int>& n_list,
                                     const std::vector<std::uint64_t>& seeds, double t_eval,
                                     double dt, const std::optional<PairPotential>& pot,
                                     int ref_multiplier, int sliced_projections) {
  if (n_list.empty() || seeds.empty()) throw Error("convergence_study: empty N list or seed list");

  const omd::LatticeSpec lat{0};
  const omd::Scaling sc = omd::Scaling::mean_field();
  const PairPotential none = PairPotential::harmonic(0.0, 0.0, 0.0);
  const int steps = std::max(1, static_cast<int>(std::llround(t_eval / dt)));

  auto evolve = [&](measure::EmpiricalMeasure m) {
    omd::ParticleSystem sys = system_from(m, def);
    for (int k = 0; k < steps; ++k) omd::step(sys, pot ? *pot : none, lat, t_eval / steps, sc);
    return measure_from(sys);
  };

  ConvergenceSummary out;
  int n_max = 0;
  for (int n : n_list) n_max = std::max(n_max, n);

  for (std::uint64_t seed : seeds) {
    measure::EmpiricalMeasure ref;
    if (pot) {
      CounterRng rng(seed, 0x4ef5);
      ref = evolve(sample_cloud(spec, ref_multiplier * n_max, rng));
    }
    bool monotone = true;
    double prev = -1.0;
    for (int n : n_list) {
      CounterRng rng(seed, 0x100 + static_cast<std::uint64_t>(n));
      const auto gt = evolve(sample_cloud(spec, n, rng));
      double w1;
      if (pot) {
        w1 = measure::w1_sliced(gt, ref, sliced_projections, seed ^ 0x51ce);
      } else {
        // independent same-size draw pushed through the exact flow
        CounterRng rng_ref(seed, 0x9000 + static_cast<std::uint64_t>(n));
        auto ref_n = sample_cloud(spec, n, rng_ref);
        for (auto& p : ref_n.points) p = exact_phase_flow(def, p, t_eval);
        w1 = measure::w1_exact(gt, ref_n);
      }
      out.rows.push_back({n, seed, t_eval, w1});
      if (prev >= 0.0 && w1 >= prev) monotone = false;
      prev = w1;
    }
    if (monotone) out.monotone_fraction += 1.0;
  }
  out.monotone_fraction /= static_cast<double>(seeds.size());

  std::vector<double> lx, ly;
  for (const auto& r : out.rows) {
    lx.push_back(std::log(static_cast<double>(r.N)));
    ly.push_back(std::log(std::max(r.w1, 1e-300)));
  }
  const LineFit f = fit_line(lx, ly);
  out.slope = f.slope;
  out.slope_ci_low = f.ci_low();
  out.slope_ci_high = f.ci_high();
  return out;
}

}  // namespace homokin::meanfield
