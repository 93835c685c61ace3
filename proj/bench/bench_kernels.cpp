// Serial reference loops vs the OpenMP kernels, at solver-typical sizes.

#include <random>

#include <benchmark/benchmark.h>

#include "bisparse/kernels.hpp"
#include "bisparse/rosure.hpp"
#include "bisparse/synth.hpp"

using namespace bisparse;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(serial::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

void BM_MatmulTnSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(serial::matmul_tn(a, b));
}

void BM_MatmulTnParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_tn(a, b));
}

void BM_SoftThresholdSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(serial::soft_threshold(a, 0.5));
}

void BM_SoftThresholdParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(soft_threshold(a, 0.5));
}

void BM_FrobeniusSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(serial::frobenius_norm(a));
}

void BM_FrobeniusParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(frobenius_norm(a));
}

void BM_SolveDefaultInstance(benchmark::State& state) {
  const Instance inst = make_instance(UoSSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(solve(inst.x, SolverConfig{}));
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_MatmulParallel)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_MatmulTnSerial)->Arg(200)->Arg(400);
BENCHMARK(BM_MatmulTnParallel)->Arg(200)->Arg(400);
BENCHMARK(BM_SoftThresholdSerial)->Arg(200)->Arg(1000);
BENCHMARK(BM_SoftThresholdParallel)->Arg(200)->Arg(1000);
BENCHMARK(BM_FrobeniusSerial)->Arg(200)->Arg(1000);
BENCHMARK(BM_FrobeniusParallel)->Arg(200)->Arg(1000);
BENCHMARK(BM_SolveDefaultInstance)->Unit(benchmark::kSecond)->Iterations(1);

BENCHMARK_MAIN();
