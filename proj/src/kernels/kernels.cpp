#include "fedssg/kernels/kernels.hpp"

#include <algorithm>
#include <vector>

#include "fedssg/core/error.hpp"

namespace fedssg::kernels {

void affine_forward(const Matrix& x, std::span<const double> weight, std::span<const double> bias, Matrix& y) {
  const std::size_t in = x.cols;
  const std::size_t out = bias.size();
  require(weight.size() == in * out, "affine_forward: weight shape mismatch");
  if (y.rows != x.rows || y.cols != out) y = Matrix(x.rows, out);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(x.rows);
  const bool par = x.rows * in * out > kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t b = 0; b < batch; ++b) {
    const double* xr = x.data.data() + static_cast<std::size_t>(b) * in;
    double* yr = y.data.data() + static_cast<std::size_t>(b) * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = weight.data() + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
}

void affine_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dweight, std::span<double> dbias) {
  const std::size_t in = x.cols;
  const std::size_t out = dy.cols;
  require(dweight.size() == in * out && dbias.size() == out && x.rows == dy.rows,
          "affine_backward_params: shape mismatch");
  const std::ptrdiff_t outs = static_cast<std::ptrdiff_t>(out);
  const bool par = x.rows * in * out > kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t o = 0; o < outs; ++o) {
    double* gw = dweight.data() + static_cast<std::size_t>(o) * in;
    double gb = 0.0;
    for (std::size_t b = 0; b < x.rows; ++b) {
      const double g = dy.data[b * out + static_cast<std::size_t>(o)];
      if (g == 0.0) continue;
      gb += g;
      const double* xr = x.data.data() + b * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += g * xr[i];
    }
    dbias[static_cast<std::size_t>(o)] += gb;
  }
}

void affine_backward_input(const Matrix& dy, std::span<const double> weight, Matrix& dx) {
  const std::size_t out = dy.cols;
  require(out > 0 && weight.size() % out == 0, "affine_backward_input: weight shape mismatch");
  const std::size_t in = weight.size() / out;
  if (dx.rows != dy.rows || dx.cols != in) dx = Matrix(dy.rows, in);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(dy.rows);
  const bool par = dy.rows * in * out > kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t b = 0; b < batch; ++b) {
    double* xr = dx.data.data() + static_cast<std::size_t>(b) * in;
    std::fill(xr, xr + in, 0.0);
    const double* gr = dy.data.data() + static_cast<std::size_t>(b) * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      const double* wr = weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) xr[i] += g * wr[i];
    }
  }
}

void weighted_mean(std::span<const std::span<const double>> inputs, std::span<const double> weights,
                   std::span<double> out) {
  require(!inputs.empty() && inputs.size() == weights.size(), "weighted_mean: need one weight per input");
  const std::size_t n = out.size();
  for (const auto& in : inputs) require(in.size() == n, "weighted_mean: length mismatch");
  // Cumulative weights are shared by all coordinates.
  std::vector<double> ratio(inputs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    require(weights[k] >= 0.0, "weighted_mean: negative weight");
    total += weights[k];
    ratio[k] = total > 0.0 ? weights[k] / total : 0.0;
  }
  require(total > 0.0, "weighted_mean: weights sum to zero");
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(n);
  const bool par = n * inputs.size() > kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t j = 0; j < len; ++j) {
    double acc = inputs[0][static_cast<std::size_t>(j)];
    for (std::size_t k = 1; k < inputs.size(); ++k) {
      acc += ratio[k] * (inputs[k][static_cast<std::size_t>(j)] - acc);
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
}

namespace {

template <class F>
double blocked_sum(std::size_t n, F&& term) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (blocks <= 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += term(i);
    return acc;
  }
  std::vector<double> partial(blocks, 0.0);
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return blocked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double squared_norm(std::span<const double> a) {
  return blocked_sum(a.size(), [&](std::size_t i) { return a[i] * a[i]; });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
}

}  // namespace fedssg::kernels
