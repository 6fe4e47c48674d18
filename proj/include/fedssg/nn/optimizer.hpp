#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fedssg/nn/mlp.hpp"

namespace fedssg::nn {

enum class OptimizerKind { Sgd, AdamW };

/// Contiguous parameter range sharing one learning rate.
struct ParamGroup {
  IndexRange range;
  double lr = 0.0;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdamW;
  double weight_decay = 0.0;
  std::optional<double> grad_clip_norm;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order optimizer with per-group learning rates.
///
/// AdamW uses bias-corrected moments. Weight decay is decoupled: each step
/// multiplies the parameters by (1 - lr * weight_decay) before the update.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<ParamGroup> groups, std::size_t param_count);

  /// Trunk/head groups of a classifier.
  static Optimizer for_classifier(OptimizerConfig config, const ParamVector& params, double trunk_lr, double head_lr);
  /// A single group covering all `param_count` values.
  static Optimizer single_group(OptimizerConfig config, std::size_t param_count, double lr);

  void step(std::span<double> params, std::span<const double> grad);
  void scale_learning_rates(double factor);

  const std::vector<ParamGroup>& groups() const { return groups_; }
  const OptimizerConfig& config() const { return config_; }
  long long steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  OptimizerConfig config_;
  std::vector<ParamGroup> groups_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long t_ = 0;
  std::vector<double> scratch_;
};

/// Rescales `grad` in place so its L2 norm is at most `max_norm`. Returns
/// the norm before clipping. A gradient already within the cap up to one
/// part in 1e12 is left untouched, so clipping is idempotent.
double clip_grad_norm(std::span<double> grad, double max_norm);

/// Learning-rate reduction on a stalled validation metric.
///
/// An epoch counts as an improvement only when `best - loss > min_delta`.
/// After `patience` consecutive non-improving epochs the rates are scaled by
/// `factor` and the counter restarts.
class PlateauScheduler {
 public:
  struct Config {
    double factor = 0.5;
    int patience = 3;
    double min_delta = 1e-4;

    friend bool operator==(const Config&, const Config&) = default;
  };

  PlateauScheduler() = default;
  explicit PlateauScheduler(Config config) : config_(config) {}

  /// Records one epoch; returns true when the learning rates must be scaled.
  bool observe(double loss);
  /// observe() and apply the reduction to `optimizer`.
  bool step(double loss, Optimizer& optimizer);

  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  const Config& config() const { return config_; }

 private:
  Config config_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_epochs_ = 0;
};

}  // namespace fedssg::nn
