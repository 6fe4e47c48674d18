#include "fedssg/generator/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fedssg/core/error.hpp"

namespace fedssg::gen {

NoiseSchedule cosine_schedule(int steps, double offset, double max_beta) {
  require(steps >= 2, "cosine_schedule: need at least 2 steps");
  require(max_beta > 0.0 && max_beta < 1.0, "cosine_schedule: max_beta must be in (0,1)");
  const double T = static_cast<double>(steps);
  auto f = [&](int t) {
    const double c = std::cos(((t / T + offset) / (1.0 + offset)) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  NoiseSchedule s;
  s.steps = steps;
  s.alpha_bar.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  s.beta.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  s.alpha.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  double prev_target = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double target = f(t) / f0;
    const double beta = std::min(1.0 - target / prev_target, max_beta);
    prev_target = target;
    const auto i = static_cast<std::size_t>(t);
    s.beta[i] = beta;
    s.alpha[i] = 1.0 - beta;
    s.alpha_bar[i] = s.alpha_bar[i - 1] * s.alpha[i];
  }
  return s;
}

}  // namespace fedssg::gen
