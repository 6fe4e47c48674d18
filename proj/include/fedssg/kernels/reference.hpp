#pragma once

// Serial reference versions of the kernels in kernels.hpp. Kept for tests and
// the benchmark; production code calls the parallel ones.

#include <span>

#include "fedssg/nn/matrix.hpp"

namespace fedssg::kernels::reference {

using nn::Matrix;

void affine_forward(const Matrix& x, std::span<const double> weight, std::span<const double> bias, Matrix& y);
void affine_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dweight, std::span<double> dbias);
void affine_backward_input(const Matrix& dy, std::span<const double> weight, Matrix& dx);
void weighted_mean(std::span<const std::span<const double>> inputs, std::span<const double> weights,
                   std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace fedssg::kernels::reference
