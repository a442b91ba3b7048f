#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "homokin/errors.hpp"
#include "homokin/measure.hpp"
#include "homokin/rng.hpp"

using namespace homokin;
using measure::EmpiricalMeasure;

namespace {

EmpiricalMeasure random_cloud(CounterRng& rng, int n, double scale = 1.0) {
  std::vector<PhasePoint> pts(n);
  for (auto& p : pts) p = {rng.normal3(scale), rng.normal3(scale)};
  return EmpiricalMeasure::uniform(std::move(pts));
}

// exhaustive minimum over all assignments; tractable for n <= 8
double brute_force_min_cost(const std::vector<double>& cost, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (int i = 0; i < n; ++i) s += cost[i * n + perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double brute_force_w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const int n = static_cast<int>(a.size());
  std::vector<double> cost(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[i * n + j] = phase_dist(a.points[i], b.points[j]);
  return brute_force_min_cost(cost, n) / n;
}

// Independent 1D oracle: W1 between two discrete measures on the line equals
// the integral of |F_a - F_b| over the union of supports.
double cdf_integral_w1(std::vector<double> va, std::vector<double> wa, std::vector<double> vb,
                       std::vector<double> wb) {
  std::vector<std::pair<double, int>> events;  // (position, which measure)
  for (std::size_t i = 0; i < va.size(); ++i) events.push_back({va[i], 0});
  for (std::size_t i = 0; i < vb.size(); ++i) events.push_back({vb[i], 1});
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return events[i].first < events[j].first; });

  // walk the sorted support, integrating |F_a - F_b| between atoms
  double fa = 0, fb = 0, total = 0, prev = 0;
  bool started = false;
  // weights aligned with va/vb order; rebuild lookup per event
  std::size_t ia_used = 0, ib_used = 0;
  std::vector<std::size_t> a_order(va.size()), b_order(vb.size());
  std::iota(a_order.begin(), a_order.end(), 0);
  std::iota(b_order.begin(), b_order.end(), 0);
  std::sort(a_order.begin(), a_order.end(),
            [&](std::size_t i, std::size_t j) { return va[i] < va[j]; });
  std::sort(b_order.begin(), b_order.end(),
            [&](std::size_t i, std::size_t j) { return vb[i] < vb[j]; });

  for (std::size_t k : order) {
    const double x = events[k].first;
    if (started) total += std::abs(fa - fb) * (x - prev);
    if (events[k].second == 0) {
      fa += wa[a_order[ia_used++]];
    } else {
      fb += wb[b_order[ib_used++]];
    }
    prev = x;
    started = true;
  }
  return total;
}

}  // namespace

TEST_CASE("assignment solver matches exhaustive search") {
  CounterRng rng(5, 0x3ea01);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));  // 2..6
    std::vector<double> cost(n * n);
    for (auto& c : cost) c = rng.uniform(0.0, 10.0);
    const double fast = measure::assignment_min_cost(cost, n);
    const double brute = brute_force_min_cost(cost, n);
    CHECK(fast == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("exact W1 matches brute-force matching for small clouds") {
  CounterRng rng(6, 0x3ea02);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const auto a = random_cloud(rng, n);
    const auto b = random_cloud(rng, n);
    CHECK(measure::w1_exact(a, b) == doctest::Approx(brute_force_w1(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("exact W1 basic identities") {
  CounterRng rng(9, 0x3ea03);
  const auto a = random_cloud(rng, 32);
  CHECK(measure::w1_exact(a, a) == 0.0);

  // permuting one cloud changes nothing: the matching undoes it
  EmpiricalMeasure shuffled = a;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  CHECK(measure::w1_exact(a, shuffled) < 1e-12);

  // two single atoms: W1 is the phase distance
  EmpiricalMeasure p = EmpiricalMeasure::uniform({{{1, 2, 3}, {0, 0, 1}}});
  EmpiricalMeasure q = EmpiricalMeasure::uniform({{{1, 2, 0}, {0, 4, 1}}});
  CHECK(measure::w1_exact(p, q) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("W1 metric axioms on random triples") {
  CounterRng rng(13, 0x3ea04);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(15));
    const auto a = random_cloud(rng, n);
    const auto b = random_cloud(rng, n);
    const auto c = random_cloud(rng, n);
    const double dab = measure::w1_exact(a, b);
    const double dba = measure::w1_exact(b, a);
    const double dbc = measure::w1_exact(b, c);
    const double dac = measure::w1_exact(a, c);
    CHECK(std::abs(dab - dba) < 1e-10);
    CHECK(dab >= 0.0);
    CHECK(dac <= dab + dbc + 1e-9);
  }
}

TEST_CASE("W1 translation and scaling behavior") {
  CounterRng rng(17, 0x3ea05);
  const auto a = random_cloud(rng, 24);
  const auto b = random_cloud(rng, 24);
  const double d = measure::w1_exact(a, b);

  // common translation in phase space is invisible
  const Vec3 sx = {0.3, -1.0, 2.0}, sw = {1.0, 0.5, -0.2};
  EmpiricalMeasure at = a, bt = b;
  for (auto& p : at.points) {
    p.x += sx;
    p.w += sw;
  }
  for (auto& p : bt.points) {
    p.x += sx;
    p.w += sw;
  }
  CHECK(measure::w1_exact(at, bt) == doctest::Approx(d).epsilon(1e-10));

  // positive homogeneity of the Euclidean cost
  EmpiricalMeasure as = a, bs = b;
  for (auto& p : as.points) {
    p.x *= 2.5;
    p.w *= 2.5;
  }
  for (auto& p : bs.points) {
    p.x *= 2.5;
    p.w *= 2.5;
  }
  CHECK(measure::w1_exact(as, bs) == doctest::Approx(2.5 * d).epsilon(1e-10));

  // shifting only one cloud by v moves the distance by at most |v|
  EmpiricalMeasure ashift = a;
  for (auto& p : ashift.points) p.x += Vec3{0.1, 0, 0};
  CHECK(measure::w1_exact(ashift, b) <= d + 0.1 + 1e-12);
  CHECK(measure::w1_exact(ashift, b) >= d - 0.1 - 1e-12);
}

TEST_CASE("1D W1 agrees with the CDF-integral oracle") {
  CounterRng rng(21, 0x3ea06);
  for (int trial = 0; trial < 50; ++trial) {
    const int na = 1 + static_cast<int>(rng.below(12));
    const int nb = 1 + static_cast<int>(rng.below(12));
    std::vector<double> va(na), vb(nb), wa(na), wb(nb);
    double sa = 0, sb = 0;
    for (auto& v : va) v = rng.uniform(-3.0, 3.0);
    for (auto& v : vb) v = rng.uniform(-3.0, 3.0);
    for (auto& w : wa) {
      w = rng.uniform(0.1, 1.0);
      sa += w;
    }
    for (auto& w : wb) {
      w = rng.uniform(0.1, 1.0);
      sb += w;
    }
    for (auto& w : wa) w /= sa;
    for (auto& w : wb) w /= sb;
    const double oracle = cdf_integral_w1(va, wa, vb, wb);
    CHECK(measure::w1_1d(va, wa, vb, wb) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("1D W1 equals the sorted mean gap for equal uniform samples") {
  CounterRng rng(25, 0x3ea07);
  const int n = 40;
  std::vector<double> va(n), vb(n), w(n, 1.0 / n);
  for (auto& v : va) v = rng.normal();
  for (auto& v : vb) v = rng.normal();
  std::vector<double> sa = va, sb = vb;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double expect = 0;
  for (int i = 0; i < n; ++i) expect += std::abs(sa[i] - sb[i]) / n;
  CHECK(measure::w1_1d(va, w, vb, w) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sliced W1 sees two atoms through the mean projected length") {
  // For Diracs at phase distance d, every projection contributes |u . e| d;
  // the mean over the 5-sphere is 16/(15 pi), a frozen dimensional constant.
  EmpiricalMeasure p = EmpiricalMeasure::uniform({{{0, 0, 0}, {0, 0, 0}}});
  EmpiricalMeasure q = EmpiricalMeasure::uniform({{{2, 0, 0}, {0, 0, 0}}});
  const double factor = 16.0 / (15.0 * 3.14159265358979323846);
  const double sliced = measure::w1_sliced(p, q, 8192, 99);
  CHECK(sliced == doctest::Approx(2.0 * factor).epsilon(0.03));
  // deterministic in the seed
  CHECK(measure::w1_sliced(p, q, 8192, 99) == sliced);
  // and a lower bound on the exact distance
  CHECK(sliced < 2.0);
}

TEST_CASE("sliced W1 handles unequal sizes and weights") {
  CounterRng rng(29, 0x3ea08);
  const auto a = random_cloud(rng, 20);
  EmpiricalMeasure b;
  for (int i = 0; i < 10; ++i) b.points.push_back({rng.normal3(1.0), rng.normal3(1.0)});
  b.weights.assign(10, 0.0);
  double s = 0;
  for (auto& w : b.weights) {
    w = rng.uniform(0.5, 1.5);
    s += w;
  }
  for (auto& w : b.weights) w /= s;
  const double d = measure::w1_sliced(a, b, 128, 7);
  CHECK(d > 0.0);
  CHECK(std::isfinite(d));
  CHECK(measure::w1_sliced(a, a, 128, 7) < 1e-12);
}

TEST_CASE("measure validation and exact-W1 contract") {
  EmpiricalMeasure empty;
  CHECK_THROWS_AS(empty.validate(), UnsupportedMeasure);

  EmpiricalMeasure bad_sum;
  bad_sum.points = {{{0, 0, 0}, {0, 0, 0}}};
  bad_sum.weights = {0.5};
  CHECK_THROWS_AS(bad_sum.validate(), UnsupportedMeasure);

  EmpiricalMeasure negative;
  negative.points = {{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {0, 0, 0}}};
  negative.weights = {1.5, -0.5};
  CHECK_THROWS_AS(negative.validate(), UnsupportedMeasure);

  CounterRng rng(31, 0x3ea09);
  const auto a = random_cloud(rng, 4);
  const auto b = random_cloud(rng, 5);
  CHECK_THROWS_AS((void)measure::w1_exact(a, b), UnsupportedMeasure);

  EmpiricalMeasure weighted = random_cloud(rng, 4);
  weighted.weights = {0.4, 0.3, 0.2, 0.1};
  CHECK_THROWS_AS((void)measure::w1_exact(weighted, weighted), UnsupportedMeasure);
}

TEST_CASE("CSV round-trip preserves doubles exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "homokin_measure_test";
  fs::create_directories(dir);

  CounterRng rng(37, 0x3ea0a);
  auto a = random_cloud(rng, 17);
  const std::string p1 = (dir / "uniform.csv").string();
  measure::save_csv(p1, a);
  const auto a2 = measure::load_csv(p1);
  REQUIRE(a2.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a2.points[i].x.x == a.points[i].x.x);
    CHECK(a2.points[i].w.z == a.points[i].w.z);
    CHECK(a2.weights[i] == a.weights[i]);
  }

  // non-uniform weights survive through the optional column
  EmpiricalMeasure w = a;
  w.weights.assign(a.size(), 0.0);
  double s = 0;
  for (auto& x : w.weights) {
    x = rng.uniform(0.5, 2.0);
    s += x;
  }
  for (auto& x : w.weights) x /= s;
  const std::string p2 = (dir / "weighted.csv").string();
  measure::save_csv(p2, w);
  const auto w2 = measure::load_csv(p2);
  REQUIRE(w2.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w2.weights[i] == w.weights[i]);

  fs::remove_all(dir);
}
