#include "fedssg/nn/matrix.hpp"

#include <algorithm>

namespace fedssg::nn {

void Matrix::fill(double v) { std::fill(data.begin(), data.end(), v); }

}  // namespace fedssg::nn
