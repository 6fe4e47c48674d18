#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "fedssg/core/rng.hpp"
#include "fedssg/kernels/kernels.hpp"
#include "fedssg/kernels/reference.hpp"

using namespace fedssg;
namespace ref = fedssg::kernels::reference;

namespace {

nn::Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  nn::Matrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

std::vector<double> random_vector(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("parallel affine kernels equal the serial reference bit for bit") {
  RngStream rng(1);
  // Second shape is large enough to cross the parallel threshold.
  using Shape = std::tuple<std::size_t, std::size_t, std::size_t>;
  for (auto [rows, in, out] : {Shape{3, 4, 5}, Shape{512, 64, 48}}) {
    const auto x = random_matrix(rows, in, rng);
    const auto w = random_vector(in * out, rng);
    const auto b = random_vector(out, rng);
    nn::Matrix y1, y2;
    kernels::affine_forward(x, w, b, y1);
    ref::affine_forward(x, w, b, y2);
    CHECK(y1 == y2);

    const auto dy = random_matrix(rows, out, rng);
    std::vector<double> gw1(in * out, 0.0), gb1(out, 0.0), gw2 = gw1, gb2 = gb1;
    kernels::affine_backward_params(x, dy, gw1, gb1);
    ref::affine_backward_params(x, dy, gw2, gb2);
    CHECK(gw1 == gw2);
    CHECK(gb1 == gb2);

    nn::Matrix dx1, dx2;
    kernels::affine_backward_input(dy, w, dx1);
    ref::affine_backward_input(dy, w, dx2);
    CHECK(dx1 == dx2);
  }
}

TEST_CASE("affine forward matches a hand computed product") {
  nn::Matrix x(1, 2);
  x.data = {1.0, 2.0};
  const std::vector<double> w = {1.0, 0.5, -1.0, 3.0};  // rows are outputs
  const std::vector<double> b = {0.25, -1.0};
  nn::Matrix y;
  kernels::affine_forward(x, w, b, y);
  CHECK(y.data == std::vector<double>{2.25, 4.0});
}

TEST_CASE("weighted mean equals the brute force mean and the reference") {
  RngStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(100);
    std::vector<std::vector<double>> xs;
    std::vector<std::span<const double>> views;
    std::vector<double> w;
    for (std::size_t i = 0; i < k; ++i) {
      xs.push_back(random_vector(n, rng));
      w.push_back(rng.uniform(0.1, 10.0));
    }
    for (const auto& x : xs) views.emplace_back(x);
    std::vector<double> out(n), ref_out(n);
    kernels::weighted_mean(views, w, out);
    ref::weighted_mean(views, w, ref_out);
    CHECK(out == ref_out);
    double wsum = 0.0;
    for (double v : w) wsum += v;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += w[i] * xs[i][j];
      CHECK(std::abs(out[j] - acc / wsum) < 1e-12);
    }
  }
}

TEST_CASE("weighted mean of identical inputs is exact") {
  const std::vector<double> x = {0.1, 1.0 / 3.0, -7.25};
  const std::vector<std::span<const double>> views = {x, x, x};
  const std::vector<double> w = {1.0, 3.0, 0.7};
  std::vector<double> out(3);
  kernels::weighted_mean(views, w, out);
  CHECK(out == x);
}

TEST_CASE("reductions agree with the serial sums") {
  RngStream rng(3);
  for (std::size_t n : {std::size_t{0}, std::size_t{7}, std::size_t{4096}, std::size_t{20000}}) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    CHECK(std::abs(kernels::dot(a, b) - ref::dot(a, b)) <= 1e-10 * (1.0 + std::abs(ref::dot(a, b))));
    CHECK(std::abs(kernels::squared_norm(a) - ref::squared_norm(a)) <= 1e-10 * (1.0 + ref::squared_norm(a)));
    auto y1 = b, y2 = b;
    kernels::axpy(0.3, a, y1);
    ref::axpy(0.3, a, y2);
    CHECK(y1 == y2);
  }
  // Below one block the blocked sum is the serial sum.
  const auto a = random_vector(1000, rng);
  CHECK(kernels::dot(a, a) == ref::dot(a, a));
}
