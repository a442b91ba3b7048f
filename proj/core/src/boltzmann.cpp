#include "homokin/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "homokin/errors.hpp"
#include "homokin/ode.hpp"
#include "homokin/stats.hpp"

namespace homokin::boltzmann {

VelocityEnsemble gaussian_ensemble(std::size_t n, double theta, const Vec3& mean, double rho,
                                   std::uint64_t seed) {
  CounterRng init(seed, 0x111);
  const double s = std::sqrt(theta);
  std::vector<Vec3> w(n);
  for (auto& v : w) v = mean + init.normal3(s);
  return VelocityEnsemble(std::move(w), rho, seed);
}

VelocityEnsemble gaussian_ensemble_aniso(std::size_t n, const Mat3& cov, const Vec3& mean,
                                         double rho, std::uint64_t seed) {
  // Cholesky cov = C C^T
  Mat3 C{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = cov(i, j);
      for (int k = 0; k < j; ++k) s -= C(i, k) * C(j, k);
      if (i == j) {
        if (s <= 0) throw Error("gaussian_ensemble_aniso: covariance not positive definite");
        C(i, i) = std::sqrt(s);
      } else {
        C(i, j) = s / C(j, j);
      }
    }
  }
  CounterRng init(seed, 0x111);
  std::vector<Vec3> w(n);
  for (auto& v : w) v = mean + C * init.normal3(1.0);
  return VelocityEnsemble(std::move(w), rho, seed);
}

void scatter_reflect(Vec3& wi, Vec3& wj, const Vec3& omega) {
  const double a = dot(wi - wj, omega);
  wi -= a * omega;
  wj += a * omega;
}

void scatter_isotropic(Vec3& wi, Vec3& wj, const Vec3& sigma) {
  const Vec3 c = 0.5 * (wi + wj);
  const double half_g = 0.5 * norm(wi - wj);
  wi = c + half_g * sigma;
  wj = c - half_g * sigma;
}

void deformation_substep(VelocityEnsemble& ens, const Deformation& def, double dt) {
  const Mat3 M = def.flow_map(ens.t, ens.t + dt);
  for (auto& v : ens.w) v = M * v;
  ens.number_density *= def.jacobian_det(ens.t) / def.jacobian_det(ens.t + dt);
  ens.t += dt;
}

namespace {

// floor + one Bernoulli draw for the fractional part
std::size_t integer_count(double mean, CounterRng& rng) {
  const double fl = std::floor(mean);
  std::size_t n = static_cast<std::size_t>(fl);
  if (rng.uniform() < mean - fl) ++n;
  return n;
}

void pick_pair(std::size_t n, CounterRng& rng, std::size_t& i, std::size_t& j) {
  i = rng.below(n);
  j = rng.below(n - 1);
  if (j >= i) ++j;
}

}  // namespace

void collision_substep(VelocityEnsemble& ens, CollisionKernel& kernel, double dt) {
  const std::size_t n = ens.w.size();
  if (n < 2 || dt <= 0) return;
  const double rho_over_eps = ens.number_density / kernel.knudsen;

  if (kernel.kind == CollisionKernel::Kind::maxwell) {
    const double lambda = kernel.rate_const * rho_over_eps;
    const std::size_t pairs = integer_count(0.5 * n * lambda * dt, ens.rng);
    for (std::size_t p = 0; p < pairs; ++p) {
      std::size_t i, j;
      pick_pair(n, ens.rng, i, j);
      const Vec3 omega = ens.rng.unit_sphere();
      scatter_reflect(ens.w[i], ens.w[j], omega);
    }
    return;
  }

  // hard sphere: refresh the relative-speed bound, grow the majorant if the
  // bound outran it (never shrink)
  Vec3 mean{};
  for (const auto& v : ens.w) mean += v;
  mean *= 1.0 / static_cast<double>(n);
  double max_c = 0;
  for (const auto& v : ens.w) max_c = std::max(max_c, norm(v - mean));
  const double bound = 2.0 * max_c;
  if (kernel.g_max <= 0.0 || bound > kernel.g_max) kernel.g_max = 1.5 * bound;

  const double sigma_t = M_PI * kernel.diameter * kernel.diameter;
  const double lambda_max = rho_over_eps * sigma_t * kernel.g_max;
  const std::size_t cand = integer_count(0.5 * n * lambda_max * dt, ens.rng);
  for (std::size_t p = 0; p < cand; ++p) {
    std::size_t i, j;
    pick_pair(n, ens.rng, i, j);
    const double g = norm(ens.w[i] - ens.w[j]);
    if (g > kernel.g_max)
      throw MajorantOverflow("relative speed " + std::to_string(g) + " exceeds majorant " +
                             std::to_string(kernel.g_max));
    if (ens.rng.uniform() * kernel.g_max < g) {
      const Vec3 sigma = ens.rng.unit_sphere();
      scatter_isotropic(ens.w[i], ens.w[j], sigma);
    }
  }
}

Moments moments(const VelocityEnsemble& ens) {
  const std::size_t n = ens.w.size();
  Moments mo;
  mo.rho = ens.number_density;
  if (n == 0) return mo;
  Vec3 u{};
  for (const auto& v : ens.w) u += v;
  u *= 1.0 / static_cast<double>(n);
  mo.u = u;
  Mat3 cc{};
  Vec3 q{};
  double c2sum = 0;
  for (const auto& v : ens.w) {
    const Vec3 c = v - u;
    const double c2 = norm2(c);
    c2sum += c2;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cc(a, b) += c[a] * c[b];
    q += c2 * c;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  mo.e = 0.5 * c2sum * inv_n;
  mo.theta = 2.0 * mo.e / 3.0;
  mo.P = (mo.rho * inv_n) * cc;
  mo.q = (mo.rho * inv_n) * q;
  return mo;
}

Table to_table(const MomentsSeries& s) {
  Table tb;
  tb.columns = {"t", "rho", "theta", "e", "P11", "P12", "P13", "P22", "P23", "P33", "q1", "q2", "q3"};
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const Moments& m = s.m[k];
    tb.append({s.t[k], m.rho, m.theta, m.e, m.P(0, 0), m.P(0, 1), m.P(0, 2), m.P(1, 1), m.P(1, 2),
               m.P(2, 2), m.q.x, m.q.y, m.q.z});
  }
  return tb;
}

MomentsSeries from_table(const Table& tb) {
  MomentsSeries s;
  const std::size_t it = tb.col_index("t"), irho = tb.col_index("rho"),
                    itheta = tb.col_index("theta"), ie = tb.col_index("e");
  const std::size_t ip[6] = {tb.col_index("P11"), tb.col_index("P12"), tb.col_index("P13"),
                             tb.col_index("P22"), tb.col_index("P23"), tb.col_index("P33")};
  const std::size_t iq[3] = {tb.col_index("q1"), tb.col_index("q2"), tb.col_index("q3")};
  for (const auto& row : tb.rows) {
    Moments m;
    m.rho = row[irho];
    m.theta = row[itheta];
    m.e = row[ie];
    m.P(0, 0) = row[ip[0]];
    m.P(0, 1) = m.P(1, 0) = row[ip[1]];
    m.P(0, 2) = m.P(2, 0) = row[ip[2]];
    m.P(1, 1) = row[ip[3]];
    m.P(1, 2) = m.P(2, 1) = row[ip[4]];
    m.P(2, 2) = row[ip[5]];
    m.q = {row[iq[0]], row[iq[1]], row[iq[2]]};
    s.t.push_back(row[it]);
    s.m.push_back(m);
  }
  return s;
}

MomentsSeries run(VelocityEnsemble& ens, const Deformation& def, CollisionKernel& kernel,
                  double dt, double horizon, int stride) {
  const int steps = static_cast<int>(std::llround(horizon / dt));
  {
    double lambda;
    if (kernel.kind == CollisionKernel::Kind::maxwell) {
      lambda = kernel.rate_const * ens.number_density / kernel.knudsen;
    } else {
      const Moments m0 = moments(ens);
      lambda = ens.number_density / kernel.knudsen * M_PI * kernel.diameter * kernel.diameter *
               2.0 * std::sqrt(3.0 * m0.theta);
    }
    if (lambda * dt > 0.5)
      std::fprintf(stderr,
                   "warning: ~%.2f collisions per particle per step (dt too coarse for the "
                   "collision rate)\n",
                   lambda * dt);
  }

  MomentsSeries out;
  auto emit = [&]() {
    out.t.push_back(ens.t);
    out.m.push_back(moments(ens));
  };
  emit();
  for (int k = 1; k <= steps; ++k) {
    collision_substep(ens, kernel, 0.5 * dt);
    deformation_substep(ens, def, dt);
    collision_substep(ens, kernel, 0.5 * dt);
    if (k % stride == 0 || k == steps) emit();
  }
  return out;
}

SelfSimilarFit self_similar_fit(const MomentsSeries& s) {
  const std::size_t n = s.t.size();
  if (n < 8) throw InsufficientGrowth("series too short for a tail fit");
  const double theta0 = s.m.front().theta;
  std::size_t quad = n;
  for (std::size_t k = 0; k < n; ++k)
    if (s.m[k].theta >= 4.0 * theta0) {
      quad = k;
      break;
    }
  if (quad == n) {
    const double growth = s.m.back().theta / theta0;
    throw InsufficientGrowth("temperature grew only " + std::to_string(growth) +
                             "x, need 4x for a self-similar tail");
  }
  const std::size_t fit_start = quad + (n - quad) / 2;
  if (n - fit_start < 4) throw InsufficientGrowth("tail window too short");

  std::vector<double> ts, lth;
  for (std::size_t k = fit_start; k < n; ++k) {
    ts.push_back(s.t[k]);
    lth.push_back(std::log(s.m[k].theta));
  }
  const LineFit f = fit_line(ts, lth);

  SelfSimilarFit out;
  out.beta_hat = 0.5 * f.slope;
  out.beta_se = 0.5 * f.se_slope;
  out.fit_start = fit_start;

  auto window_mean = [&](std::size_t a, std::size_t b) {
    Mat3 acc{};
    for (std::size_t k = a; k < b; ++k) {
      const Moments& m = s.m[k];
      acc += (1.0 / (m.rho * m.theta)) * m.P;
    }
    return (1.0 / static_cast<double>(b - a)) * acc;
  };
  const std::size_t mid = fit_start + (n - fit_start) / 2;
  const Mat3 first = window_mean(fit_start, mid), second = window_mean(mid, n);
  out.p_hat = window_mean(fit_start, n);
  out.drift = frobenius_norm(second - first);
  return out;
}

MomentsSeries bgk_moment_solve(const Moments& m0, const Deformation& def, double nu, double dt,
                               double horizon, int stride) {
  // y = (rho, P11, P12, P13, P22, P23, P33)
  std::vector<double> y = {m0.rho,     m0.P(0, 0), m0.P(0, 1), m0.P(0, 2),
                           m0.P(1, 1), m0.P(1, 2), m0.P(2, 2)};
  auto unpack = [](const std::vector<double>& s) {
    Mat3 P;
    P(0, 0) = s[1];
    P(0, 1) = P(1, 0) = s[2];
    P(0, 2) = P(2, 0) = s[3];
    P(1, 1) = s[4];
    P(1, 2) = P(2, 1) = s[5];
    P(2, 2) = s[6];
    return P;
  };
  auto rhs = [&](double t, const std::vector<double>& s, std::vector<double>& ds) {
    const Mat3 L = def.velocity_gradient(t);
    const double trL = trace(L);
    const double rho = s[0];
    const Mat3 P = unpack(s);
    const double theta = trace(P) / (3.0 * rho);
    const Mat3 D = -1.0 * (L * P + P * transpose(L)) - trL * P -
                   nu * (P - (rho * theta) * Mat3::identity());
    ds = {-trL * rho, D(0, 0), D(0, 1), D(0, 2), D(1, 1), D(1, 2), D(2, 2)};
  };

  MomentsSeries out;
  auto emit = [&](double t, const std::vector<double>& s) {
    Moments m;
    m.rho = s[0];
    m.P = unpack(s);
    m.e = 0.5 * trace(m.P) / m.rho;
    m.theta = 2.0 * m.e / 3.0;
    out.t.push_back(t);
    out.m.push_back(m);
  };
  const int steps = static_cast<int>(std::llround(horizon / dt));
  emit(0.0, y);
  for (int k = 1; k <= steps; ++k) {
    rk4_step(rhs, (k - 1) * dt, dt, y);
    if (k % stride == 0 || k == steps) emit(k * dt, y);
  }
  return out;
}

}  // namespace homokin::boltzmann
