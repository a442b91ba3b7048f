// Microbenchmarks for the hot paths: exact W1 (assignment solver), DSMC
// collision sweeps, pair-force evaluation with image shells, and the
// deformation propagator.

#include <benchmark/benchmark.h>

#include <vector>

#include "homokin/boltzmann.hpp"
#include "homokin/deformation.hpp"
#include "homokin/meanfield.hpp"
#include "homokin/measure.hpp"
#include "homokin/omd.hpp"
#include "homokin/potential.hpp"
#include "homokin/rng.hpp"

using namespace homokin;

namespace {

measure::EmpiricalMeasure cloud(int n, std::uint64_t stream) {
  CounterRng rng(42, stream);
  measure::EmpiricalMeasure m;
  for (int i = 0; i < n; ++i) m.points.push_back({rng.normal3(1.0), rng.normal3(1.0)});
  m.weights.assign(n, 1.0 / n);
  return m;
}

void BM_w1_exact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = cloud(n, 0xbe01);
  const auto b = cloud(n, 0xbe02);
  for (auto _ : state) benchmark::DoNotOptimize(measure::w1_exact(a, b));
  state.SetComplexityN(n);
}
BENCHMARK(BM_w1_exact)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond)->Complexity();

void BM_w1_sliced(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = cloud(n, 0xbe03);
  const auto b = cloud(n, 0xbe04);
  for (auto _ : state) benchmark::DoNotOptimize(measure::w1_sliced(a, b, 64, 7));
}
BENCHMARK(BM_w1_sliced)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_collision_substep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto ens = boltzmann::gaussian_ensemble(n, 1.0, {}, 1.0, 9);
  auto kernel = boltzmann::CollisionKernel::maxwell(1.0, 1.0);
  for (auto _ : state) boltzmann::collision_substep(ens, kernel, 0.1);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) / 20);  // pairs
}
BENCHMARK(BM_collision_substep)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_deformation_substep(benchmark::State& state) {
  auto ens = boltzmann::gaussian_ensemble(100000, 1.0, {}, 1.0, 9);
  const Deformation def = Deformation::simple_shear(1.0);
  for (auto _ : state) boltzmann::deformation_substep(ens, def, 1e-4);
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_deformation_substep)->Unit(benchmark::kMicrosecond);

void BM_force_with_images(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int extent = static_cast<int>(state.range(1));
  CounterRng rng(3, 0xbe05);
  std::vector<Vec3> xs(n);
  for (auto& x : xs) x = rng.normal3(0.4);
  const Deformation def = Deformation::simple_shear(1.0);
  const auto pot = PairPotential::harmonic(1.0, 0.5, 0.9);
  const omd::LatticeSpec lat{extent};
  const auto sc = omd::Scaling::unit();
  for (auto _ : state) {
    Vec3 f{};
    for (int i = 0; i < n; ++i) f += omd::force_on(xs, 0.3, def, pot, lat, i, sc);
    benchmark::DoNotOptimize(f);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_force_with_images)->Args({64, 0})->Args({64, 1})->Args({64, 2})
    ->Unit(benchmark::kMicrosecond);

void BM_strang_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CounterRng rng(4, 0xbe06);
  std::vector<Vec3> x0(n), w0(n);
  for (int i = 0; i < n; ++i) {
    x0[i] = rng.normal3(0.5);
    w0[i] = rng.normal3(0.7);
  }
  const auto pot = PairPotential::harmonic(1.0, 1.0, 2.5);
  const omd::LatticeSpec lat{0};
  omd::ParticleSystem sys(Deformation::simple_shear(1.0), x0, w0);
  for (auto _ : state) omd::step(sys, pot, lat, 1e-5, omd::Scaling::mean_field());
}
BENCHMARK(BM_strang_step)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_flow_map(benchmark::State& state) {
  CounterRng rng(5, 0xbe07);
  Mat3 a;
  for (std::size_t i = 0; i < 9; ++i) a.m[i] = rng.uniform(-0.5, 0.5);
  const Deformation def(a);
  double t = 0;
  for (auto _ : state) {
    t += 1e-6;
    benchmark::DoNotOptimize(def.flow_map(0.0, 0.3 + t));
  }
}
BENCHMARK(BM_flow_map);

void BM_transport_pushforward(benchmark::State& state) {
  const auto g0 = cloud(static_cast<int>(state.range(0)), 0xbe08);
  const Deformation def = Deformation::simple_shear(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(meanfield::transport_pushforward(g0, def, 0.8));
}
BENCHMARK(BM_transport_pushforward)->Arg(4096)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
