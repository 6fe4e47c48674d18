#include "fedssg/kernels/reference.hpp"

#include "fedssg/core/error.hpp"

namespace fedssg::kernels::reference {

void affine_forward(const Matrix& x, std::span<const double> weight, std::span<const double> bias, Matrix& y) {
  const std::size_t in = x.cols;
  const std::size_t out = bias.size();
  require(weight.size() == in * out, "affine_forward: weight shape mismatch");
  y = Matrix(x.rows, out);
  for (std::size_t b = 0; b < x.rows; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += weight[o * in + i] * x(b, i);
      y(b, o) = acc;
    }
  }
}

void affine_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dweight, std::span<double> dbias) {
  const std::size_t in = x.cols;
  const std::size_t out = dy.cols;
  for (std::size_t o = 0; o < out; ++o) {
    double gb = 0.0;
    for (std::size_t b = 0; b < x.rows; ++b) {
      const double g = dy(b, o);
      if (g == 0.0) continue;
      gb += g;
      for (std::size_t i = 0; i < in; ++i) dweight[o * in + i] += g * x(b, i);
    }
    dbias[o] += gb;
  }
}

void affine_backward_input(const Matrix& dy, std::span<const double> weight, Matrix& dx) {
  const std::size_t out = dy.cols;
  const std::size_t in = weight.size() / out;
  dx = Matrix(dy.rows, in);
  for (std::size_t b = 0; b < dy.rows; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy(b, o);
      if (g == 0.0) continue;
      for (std::size_t i = 0; i < in; ++i) dx(b, i) += g * weight[o * in + i];
    }
  }
}

void weighted_mean(std::span<const std::span<const double>> inputs, std::span<const double> weights,
                   std::span<double> out) {
  require(!inputs.empty() && inputs.size() == weights.size(), "weighted_mean: need one weight per input");
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = inputs[0][j];
  double total = weights[0];
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    total += weights[k];
    const double r = total > 0.0 ? weights[k] / total : 0.0;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += r * (inputs[k][j] - out[j]);
  }
  require(total > 0.0, "weighted_mean: weights sum to zero");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace fedssg::kernels::reference
