// OpenMP kernels against their serial references on training-sized shapes.
// Pin the thread count with OMP_NUM_THREADS to compare scaling.

#include <benchmark/benchmark.h>

#include <vector>

#include "fedssg/core/rng.hpp"
#include "fedssg/kernels/kernels.hpp"
#include "fedssg/kernels/reference.hpp"

using namespace fedssg;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

nn::Matrix noise_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  nn::Matrix m(r, c);
  m.data = noise(r * c, seed);
  return m;
}

// state.range: batch rows, input width, output width.
template <auto Kernel>
void affine_forward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto x = noise_matrix(b, in, 1);
  const auto w = noise(out * in, 2);
  const auto bias = noise(out, 3);
  nn::Matrix y(b, out);
  for (auto _ : state) {
    Kernel(x, w, bias, y);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b * in * out));
}

template <auto Kernel>
void affine_backward_params(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto x = noise_matrix(b, in, 1);
  const auto dy = noise_matrix(b, out, 2);
  std::vector<double> dw(out * in), db(out);
  for (auto _ : state) {
    Kernel(x, dy, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b * in * out));
}

template <auto Kernel>
void affine_backward_input(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto dy = noise_matrix(b, out, 1);
  const auto w = noise(out * in, 2);
  nn::Matrix dx(b, in);
  for (auto _ : state) {
    Kernel(dy, w, dx);
    benchmark::DoNotOptimize(dx.data.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b * in * out));
}

// state.range: number of clients, parameter count.
template <auto Kernel>
void weighted_mean(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  std::vector<std::vector<double>> xs;
  std::vector<std::span<const double>> views;
  std::vector<double> w;
  for (std::size_t i = 0; i < k; ++i) {
    xs.push_back(noise(n, 10 + i));
    w.push_back(static_cast<double>(50 + 10 * i));
  }
  for (const auto& x : xs) views.emplace_back(x);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(views, w, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * k * n));
}

template <auto Kernel>
void dot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise(n, 1), b = noise(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void affine_shapes(benchmark::internal::Benchmark* b) {
  b->Args({32, 16, 128})->Args({32, 128, 128})->Args({128, 160, 128})->Args({1000, 128, 128});
}

void mean_shapes(benchmark::internal::Benchmark* b) { b->Args({6, 40000})->Args({12, 40000})->Args({6, 400000}); }

}  // namespace

BENCHMARK(affine_forward<kernels::affine_forward>)->Name("affine_forward/parallel")->Apply(affine_shapes);
BENCHMARK(affine_forward<kernels::reference::affine_forward>)->Name("affine_forward/serial")->Apply(affine_shapes);
BENCHMARK(affine_backward_params<kernels::affine_backward_params>)
    ->Name("affine_backward_params/parallel")
    ->Apply(affine_shapes);
BENCHMARK(affine_backward_params<kernels::reference::affine_backward_params>)
    ->Name("affine_backward_params/serial")
    ->Apply(affine_shapes);
BENCHMARK(affine_backward_input<kernels::affine_backward_input>)
    ->Name("affine_backward_input/parallel")
    ->Apply(affine_shapes);
BENCHMARK(affine_backward_input<kernels::reference::affine_backward_input>)
    ->Name("affine_backward_input/serial")
    ->Apply(affine_shapes);
BENCHMARK(weighted_mean<kernels::weighted_mean>)->Name("weighted_mean/parallel")->Apply(mean_shapes);
BENCHMARK(weighted_mean<kernels::reference::weighted_mean>)->Name("weighted_mean/serial")->Apply(mean_shapes);
BENCHMARK(dot<kernels::dot>)->Name("dot/parallel")->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(dot<kernels::reference::dot>)->Name("dot/serial")->Arg(1 << 12)->Arg(1 << 20);

BENCHMARK_MAIN();
