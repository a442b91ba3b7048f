#include "homokin/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "homokin/errors.hpp"
#include "homokin/rng.hpp"

namespace homokin::measure {

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<PhasePoint> pts) {
  EmpiricalMeasure m;
  const std::size_t n = pts.size();
  m.points = std::move(pts);
  m.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return m;
}

bool EmpiricalMeasure::uniform_weights(double tol) const {
  if (points.empty()) return false;
  const double w0 = 1.0 / static_cast<double>(points.size());
  for (double w : weights)
    if (std::abs(w - w0) > tol) return false;
  return true;
}

void EmpiricalMeasure::validate() const {
  if (points.empty()) throw UnsupportedMeasure("empty measure");
  if (weights.size() != points.size())
    throw UnsupportedMeasure("weight count " + std::to_string(weights.size()) +
                             " does not match point count " + std::to_string(points.size()));
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw UnsupportedMeasure("negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw UnsupportedMeasure("weights sum to " + std::to_string(sum) + ", expected 1");
}

double assignment_min_cost(const std::vector<double>& cost, int n, std::vector<int>* match) {
  // Jonker-Volgenant style shortest augmenting paths with dual potentials.
  // 1-based arrays; p[j] is the row matched to column j, column 0 is virtual.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      const double* row = cost.data() + static_cast<std::size_t>(i0 - 1) * n;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0;
  if (match) match->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] == 0) continue;
    total += cost[static_cast<std::size_t>(p[j] - 1) * n + (j - 1)];
    if (match) (*match)[p[j] - 1] = j - 1;
  }
  return total;
}

double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size())
    throw UnsupportedMeasure("w1_exact needs equal sizes, got " + std::to_string(a.size()) +
                             " and " + std::to_string(b.size()));
  if (a.size() > 2048)
    throw UnsupportedMeasure("w1_exact capped at n=2048, got " + std::to_string(a.size()));
  if (!a.uniform_weights() || !b.uniform_weights())
    throw UnsupportedMeasure("w1_exact needs uniform weights");
  const int n = static_cast<int>(a.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i) * n + j] = phase_dist(a.points[i], b.points[j]);
  return assignment_min_cost(cost, n) / n;
}

double w1_1d(std::vector<double> va, std::vector<double> wa,
             std::vector<double> vb, std::vector<double> wb) {
  auto order = [](std::vector<double>& v, std::vector<double>& w) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> vs(v.size()), ws(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      vs[k] = v[idx[k]];
      ws[k] = w[idx[k]];
    }
    v = std::move(vs);
    w = std::move(ws);
  };
  order(va, wa);
  order(vb, wb);
  // walk the two quantile functions in lockstep
  double total = 0;
  std::size_t i = 0, j = 0;
  double ra = wa.empty() ? 0.0 : wa[0], rb = wb.empty() ? 0.0 : wb[0];
  while (i < va.size() && j < vb.size()) {
    const double m = std::min(ra, rb);
    total += m * std::abs(va[i] - vb[j]);
    ra -= m;
    rb -= m;
    if (ra <= 1e-18 && i + 1 <= va.size()) {
      ++i;
      if (i < va.size()) ra = wa[i];
    }
    if (rb <= 1e-18 && j + 1 <= vb.size()) {
      ++j;
      if (j < vb.size()) rb = wb[j];
    }
  }
  return total;
}

double w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                 int n_projections, std::uint64_t seed) {
  a.validate();
  b.validate();
  if (n_projections < 1) throw UnsupportedMeasure("w1_sliced needs at least one projection");
  CounterRng rng(seed, /*stream=*/0x517ced);
  auto project = [](const EmpiricalMeasure& m, const double* u, std::vector<double>& out) {
    out.resize(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      const PhasePoint& p = m.points[k];
      out[k] = u[0] * p.x.x + u[1] * p.x.y + u[2] * p.x.z +
               u[3] * p.w.x + u[4] * p.w.y + u[5] * p.w.z;
    }
  };
  double acc = 0;
  std::vector<double> pa, pb;
  for (int s = 0; s < n_projections; ++s) {
    double u[6];
    double n2 = 0;
    do {
      n2 = 0;
      for (double& c : u) {
        c = rng.normal();
        n2 += c * c;
      }
    } while (n2 < 1e-12);
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : u) c *= inv;
    project(a, u, pa);
    project(b, u, pb);
    acc += w1_1d(pa, a.weights, pb, b.weights);
  }
  return acc / n_projections;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_csv(const std::string& path, const EmpiricalMeasure& m) {
  m.validate();
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  const bool with_weight = !m.uniform_weights();
  os << "x1,x2,x3,w1,w2,w3";
  if (with_weight) os << ",weight";
  os << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    const PhasePoint& p = m.points[i];
    os << fmt(p.x.x) << ',' << fmt(p.x.y) << ',' << fmt(p.x.z) << ','
       << fmt(p.w.x) << ',' << fmt(p.w.y) << ',' << fmt(p.w.z);
    if (with_weight) os << ',' << fmt(m.weights[i]);
    os << "\n";
  }
}

EmpiricalMeasure load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw UnsupportedMeasure("empty measure file " + path);
  const bool with_weight = line.find("weight") != std::string::npos;
  EmpiricalMeasure m;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    double vals[7] = {0, 0, 0, 0, 0, 0, 0};
    int k = 0;
    while (std::getline(ss, tok, ',') && k < 7) vals[k++] = std::stod(tok);
    const int expect = with_weight ? 7 : 6;
    if (k != expect)
      throw UnsupportedMeasure("bad row in " + path + ": expected " + std::to_string(expect) +
                               " columns, got " + std::to_string(k));
    m.points.push_back({{vals[0], vals[1], vals[2]}, {vals[3], vals[4], vals[5]}});
    m.weights.push_back(with_weight ? vals[6] : 0.0);
  }
  if (!with_weight && !m.points.empty())
    m.weights.assign(m.points.size(), 1.0 / static_cast<double>(m.points.size()));
  m.validate();
  return m;
}

}  // namespace homokin::measure
