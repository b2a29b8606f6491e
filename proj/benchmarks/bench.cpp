#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qcm/ansatz.hpp"
#include "qcm/estimators.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/measure.hpp"
#include "qcm/sim.hpp"
#include "qcm/vqe.hpp"

using namespace qcm;

namespace {

std::vector<double> angles(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 6.283185307179586);
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (auto& t : theta) t = u(rng);
  return theta;
}

void BM_Powers(benchmark::State& state) {
  const auto h = heisenberg_ring(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(powers(h, 4));
}
BENCHMARK(BM_Powers)->Arg(8)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_GroupTpb(benchmark::State& state) {
  const auto hk = powers(heisenberg_ring(static_cast<int>(state.range(0))), 4);
  for (auto _ : state) benchmark::DoNotOptimize(group_tpb(hk));
}
BENCHMARK(BM_GroupTpb)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_RvbEnergy(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0)), d = 7;
  const auto h = heisenberg_ring(q);
  const auto theta = angles(q * d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rvb_energy(h, d, theta));
}
BENCHMARK(BM_RvbEnergy)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_NoisyReplay(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0)), d = 3;
  const auto circuit = rvb_circuit(q, d, angles(q * d, 2));
  NoiseSpec noise;
  noise.channel = NoiseChannel::device;
  const auto start = QuantumState::zero(q, StateKind::density_matrix);
  for (auto _ : state) benchmark::DoNotOptimize(apply_circuit(circuit, start, noise));
}
BENCHMARK(BM_NoisyReplay)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SampleMoments(benchmark::State& state) {
  const int q = 8;
  const auto hk = powers(heisenberg_ring(q), 4);
  const auto g = group_tpb(hk);
  const auto psi = apply_circuit(rvb_circuit(q, 2, angles(2 * q, 3)), QuantumState::zero(q));
  const SamplingOptions o{ShotPlan{static_cast<int>(state.range(0)), 5}, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(sample_moments(hk, g, psi, o));
}
BENCHMARK(BM_SampleMoments)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_Lanczos4(benchmark::State& state) {
  const MomentSet m{{0.5, 1, 0.5, 1, 0.5}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(make_report(m, -0.2, -1.0));
}
BENCHMARK(BM_Lanczos4);

}  // namespace

BENCHMARK_MAIN();
