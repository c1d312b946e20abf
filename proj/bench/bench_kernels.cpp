#include <benchmark/benchmark.h>

#include <random>

#include "hyco/kernels.hpp"

using namespace hyco;
using namespace hyco::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// range(0): grid side, range(1): 0 serial reference, 1 OpenMP
void BM_Diffusion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Domain2D d(0, 1, 0, 1, n, n);
  GridField2D kappa(d, 1);
  const auto k = random_vector(d.nodes(), 1);
  std::copy(k.begin(), k.end(), kappa.values().begin());
  const FaceCoefficients faces = face_average(kappa);
  const auto reaction = random_vector(d.nodes(), 2), u = random_vector(d.nodes(), 3);
  std::vector<double> out(d.nodes());
  for (auto _ : state) {
    if (state.range(1)) apply_diffusion(faces, reaction, u, out);
    else apply_diffusion_reference(faces, reaction, u, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.nodes()));
}

void BM_GrayScottRhs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Domain2D d(0, 1, 0, 1, n, n);
  const GrayScottRates r{2e-6, 0.8e-6, 0.018, 0.051};
  const auto u = random_vector(d.nodes(), 4), v = random_vector(d.nodes(), 5);
  std::vector<double> du(d.nodes()), dv(d.nodes());
  for (auto _ : state) {
    if (state.range(1)) grayscott_rhs(d, r, u, v, du, dv);
    else grayscott_rhs_reference(d, r, u, v, du, dv);
    benchmark::DoNotOptimize(du.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.nodes()));
}

// range(0): batch rows; a 256 -> 256 hidden layer
void BM_AffineForward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), w = 256;
  const auto X = random_vector(static_cast<std::size_t>(rows) * w, 6), W = random_vector(w * w, 7),
             b = random_vector(w, 8);
  std::vector<double> Y(static_cast<std::size_t>(rows) * w);
  for (auto _ : state) {
    if (state.range(1)) affine_batch(X, rows, w, W, b, w, Y);
    else affine_batch_reference(X, rows, w, W, b, w, Y);
    benchmark::DoNotOptimize(Y.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

void BM_AffineBackward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), w = 256;
  const auto X = random_vector(static_cast<std::size_t>(rows) * w, 9), W = random_vector(w * w, 10),
             dY = random_vector(static_cast<std::size_t>(rows) * w, 11);
  std::vector<double> dX(X.size()), dW(W.size()), db(w);
  for (auto _ : state) {
    if (state.range(1)) affine_batch_backward(X, rows, w, W, w, dY, dX, dW, db);
    else affine_batch_backward_reference(X, rows, w, W, w, dY, dX, dW, db);
    benchmark::DoNotOptimize(dW.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

}  // namespace

BENCHMARK(BM_Diffusion)->ArgsProduct({{18, 69, 257}, {0, 1}})->ArgNames({"n", "omp"});
BENCHMARK(BM_GrayScottRhs)->ArgsProduct({{33, 65, 257}, {0, 1}})->ArgNames({"n", "omp"});
BENCHMARK(BM_AffineForward)->ArgsProduct({{225, 1000, 5000}, {0, 1}})->ArgNames({"rows", "omp"});
BENCHMARK(BM_AffineBackward)->ArgsProduct({{225, 1000, 5000}, {0, 1}})->ArgNames({"rows", "omp"});

BENCHMARK_MAIN();
