#include "fedssg/nn/optimizer.hpp"

#include <cmath>

#include "fedssg/core/error.hpp"
#include "fedssg/kernels/kernels.hpp"

namespace fedssg::nn {

Optimizer::Optimizer(OptimizerConfig config, std::vector<ParamGroup> groups, std::size_t param_count)
    : config_(config), groups_(std::move(groups)), m_(param_count, 0.0), v_(param_count, 0.0) {
  require(config_.weight_decay >= 0.0, "optimizer: weight decay must be nonnegative");
  require(!config_.grad_clip_norm || *config_.grad_clip_norm > 0.0, "optimizer: clip norm must be positive");
  for (const auto& g : groups_) {
    require(g.lr >= 0.0, "optimizer: learning rates must be nonnegative");
    require(g.range.begin <= g.range.end && g.range.end <= param_count, "optimizer: group out of range");
  }
}

Optimizer Optimizer::for_classifier(OptimizerConfig config, const ParamVector& params, double trunk_lr,
                                    double head_lr) {
  return Optimizer(config, {{params.trunk_span(), trunk_lr}, {params.head_span(), head_lr}}, params.values.size());
}

Optimizer Optimizer::single_group(OptimizerConfig config, std::size_t param_count, double lr) {
  return Optimizer(config, {{{0, param_count}, lr}}, param_count);
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "optimizer: shape mismatch");
  std::span<const double> g = grad;
  if (config_.grad_clip_norm) {
    scratch_.assign(grad.begin(), grad.end());
    clip_grad_norm(scratch_, *config_.grad_clip_norm);
    g = scratch_;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const auto& group : groups_) {
    const double lr = group.lr;
    const double decay = 1.0 - lr * config_.weight_decay;
    for (std::size_t i = group.range.begin; i < group.range.end; ++i) {
      if (config_.weight_decay != 0.0) params[i] *= decay;
      if (config_.kind == OptimizerKind::Sgd) {
        params[i] -= lr * g[i];
      } else {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g[i] * g[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }
}

void Optimizer::scale_learning_rates(double factor) {
  for (auto& g : groups_) g.lr *= factor;
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm = std::sqrt(kernels::squared_norm(grad));
  if (norm > max_norm * (1.0 + 1e-12)) {
    const double scale = max_norm / norm;
    for (double& x : grad) x *= scale;
  }
  return norm;
}

bool PlateauScheduler::observe(double loss) {
  if (!has_best_ || loss < best_ - config_.min_delta) {
    best_ = loss;
    has_best_ = true;
    bad_epochs_ = 0;
    return false;
  }
  ++bad_epochs_;
  if (bad_epochs_ >= config_.patience) {
    bad_epochs_ = 0;
    return true;
  }
  return false;
}

bool PlateauScheduler::step(double loss, Optimizer& optimizer) {
  const bool reduce = observe(loss);
  if (reduce) optimizer.scale_learning_rates(config_.factor);
  return reduce;
}

}  // namespace fedssg::nn
