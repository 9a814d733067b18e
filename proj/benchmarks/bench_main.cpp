// Microbenchmarks for the hot paths: gram assembly, low-rank
// factorization, training, and kernel CCA. Run with
//   ./kmargin_benchmarks --benchmark_min_time=0.2
// for a quick pass.

#include <benchmark/benchmark.h>

#include <vector>

#include "kmargin/classify.hpp"
#include "kmargin/kernels.hpp"
#include "kmargin/kmethods.hpp"
#include "kmargin/rng.hpp"

namespace {

using namespace kmargin;

Matrix random_points(int n, int d, std::uint64_t seed) {
  std::mt19937_64 g = make_rng(seed);
  Matrix pts(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) = normal_double(g);
  }
  return pts;
}

LabeledDataset random_dataset(int n, int d, std::uint64_t seed) {
  LabeledDataset data;
  data.points = random_points(n, d, seed);
  data.labels.resize(n);
  std::mt19937_64 g = make_rng(seed, 1);
  for (int i = 0; i < n; ++i) {
    data.labels[i] = uniform_double(g) < 0.5 ? -1 : 1;
    data.points(i, 0) += data.labels[i];  // make the classes learnable
  }
  return data;
}

void BM_Gram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix pts = random_points(n, 8, 1);
  const Kernel kernel = Kernel::gaussian(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gram(kernel, pts));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Gram)->Arg(64)->Arg(256)->Arg(1024)->Complexity();

void BM_IncompleteCholesky(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix pts = random_points(n, 8, 2);
  const Kernel kernel = Kernel::gaussian(2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(incomplete_cholesky(kernel, pts, 1e-6, n / 4));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_IncompleteCholesky)->Arg(256)->Arg(1024)->Complexity();

void BM_TrainSubgradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LabeledDataset data = random_dataset(n, 4, 3);
  TrainConfig tc;
  tc.max_iter = 200;
  tc.backend = OptBackend::kSubgrad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train(data, Kernel::gaussian(1.0), LossKind::kHinge, 0.1, tc));
  }
}
BENCHMARK(BM_TrainSubgradient)->Arg(64)->Arg(256);

void BM_TrainBundle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LabeledDataset data = random_dataset(n, 4, 3);
  TrainConfig tc;
  tc.max_iter = 200;
  tc.backend = OptBackend::kBundle;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train(data, Kernel::gaussian(1.0), LossKind::kHinge, 0.1, tc));
  }
}
BENCHMARK(BM_TrainBundle)->Arg(64)->Arg(256);

void BM_KernelCca(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix x = random_points(n, 3, 4);
  Matrix y = random_points(n, 2, 5);
  y.col(0) += x.col(0).cwiseProduct(x.col(0));
  const Kernel kernel = Kernel::gaussian(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_cca(x, y, kernel, kernel, 1e-2));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_KernelCca)->Arg(64)->Arg(128)->Arg(256)->Complexity();

}  // namespace

BENCHMARK_MAIN();
