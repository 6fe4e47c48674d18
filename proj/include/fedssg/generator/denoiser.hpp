#pragma once

#include <span>
#include <vector>

#include "fedssg/core/rng.hpp"
#include "fedssg/generator/schedule.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::gen {

struct DenoiserConfig {
  int dim = 16;
  int classes = 5;
  int time_embed_dim = 16;
  int class_embed_dim = 8;
  std::vector<int> hidden = {128, 128};
  nn::Activation activation = nn::Activation::SiLU;

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Sinusoidal embedding of an integer step: half sines, half cosines over
/// geometrically spaced frequencies 10000^(-i/half).
std::vector<double> timestep_embedding(int step, int dim);

/// Noise predictor eps(x_t, t, y). The input of the MLP is the
/// concatenation [x_t, timestep embedding, class embedding]. Parameters are
/// one flat vector: the MLP first, then (classes + 1) learnable class
/// embeddings, the last row being the null class used when conditioning is
/// dropped.
class Denoiser {
 public:
  Denoiser(DenoiserConfig config, std::vector<double> params);
  static Denoiser initialize(const DenoiserConfig& config, RngStream rng);

  const DenoiserConfig& config() const { return config_; }
  const nn::MlpTopology& topology() const { return topology_; }
  std::span<const double> params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }

  std::size_t net_param_count() const { return topology_.param_count(); }
  std::size_t param_count() const { return params_.size(); }
  int null_class() const { return config_.classes; }

  nn::Matrix build_input(std::span<const double> params, const nn::Matrix& x_t, std::span<const int> steps,
                         std::span<const int> class_ids) const;

  /// Predicted noise, one row per input row.
  nn::Matrix predict(const nn::Matrix& x_t, std::span<const int> steps, std::span<const int> class_ids) const;
  nn::Matrix predict(std::span<const double> params, const nn::Matrix& x_t, std::span<const int> steps,
                     std::span<const int> class_ids) const;

 private:
  DenoiserConfig config_;
  nn::MlpTopology topology_;
  std::vector<double> params_;
};

/// One training minibatch with everything needed to recompute its loss.
struct DiffusionBatch {
  nn::Matrix x0;
  nn::Matrix noise;
  nn::Matrix x_t;
  std::vector<int> steps;
  std::vector<int> class_ids;  // null_class where conditioning was dropped
};

/// Draws t ~ U{1..T}, eps ~ N(0, I), forms
/// x_t = sqrt(alpha_bar[t]) x0 + sqrt(1 - alpha_bar[t]) eps, and replaces each
/// label by `null_class` with probability `cond_drop`.
DiffusionBatch draw_training_batch(const NoiseSchedule& schedule, const nn::Matrix& x0, std::span<const int> labels,
                                   int null_class, double cond_drop, RngStream& rng);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// MSE + L1 between predicted and drawn noise, with the gradient over the
/// full flat parameter vector (MLP and class embeddings).
LossAndGrad diffusion_loss(const Denoiser& model, std::span<const double> params, const DiffusionBatch& batch);

}  // namespace fedssg::gen
