#pragma once

#include <vector>

namespace fedssg::gen {

/// Discrete forward-noising schedule indexed by step t = 0..T.
/// beta[0] = 0 and alpha_bar[0] = 1; for t >= 1,
/// alpha[t] = 1 - beta[t] and alpha_bar[t] = alpha_bar[t-1] * alpha[t].
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> alpha_bar;
  std::vector<double> beta;
  std::vector<double> alpha;
};

/// Cosine schedule: target alpha_bar(t) = f(t)/f(0) with
/// f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2). Betas are
/// 1 - alpha_bar(t)/alpha_bar(t-1) clipped to `max_beta` and alpha_bar is
/// their cumulative product, which equals the closed form wherever no clip
/// is active (in practice every step except the last).
NoiseSchedule cosine_schedule(int steps, double offset = 0.008, double max_beta = 0.999);

}  // namespace fedssg::gen
