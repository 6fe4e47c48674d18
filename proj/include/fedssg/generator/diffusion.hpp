#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/generator/denoiser.hpp"
#include "fedssg/generator/schedule.hpp"

namespace fedssg::gen {

/// Anything that can produce labeled synthetic feature vectors.
class SampleGenerator {
 public:
  virtual ~SampleGenerator() = default;
  virtual int dim() const = 0;
  virtual int classes() const = 0;
  /// `n` samples of class `class_id`, tagged with `domain`.
  virtual std::vector<Sample> sample(int class_id, std::size_t n, int domain, RngStream rng) const = 0;
  /// Fingerprint of everything sampling depends on.
  virtual std::uint64_t checksum() const = 0;
};

struct GeneratorConfig {
  int steps = 512;
  int epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;
  double cond_drop = 0.1;
  double guidance = 5.0;
  std::vector<int> hidden = {128, 128};
  int time_embed_dim = 16;
  int class_embed_dim = 8;
  /// Predicted clean samples are clipped to +-(x0_clip_factor * largest
  /// absolute standardized training coordinate) during sampling.
  double x0_clip_factor = 1.2;
  /// Sampling uses an exponential moving average of the weights with this
  /// decay (0 keeps the last iterate). Guidance scales up weight noise in the
  /// conditional/unconditional difference, so the average matters at g > 1.
  double ema_decay = 0.999;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Per-coordinate affine standardization; zero-spread coordinates keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data);
  static Standardizer identity(int dim);
  void apply(std::span<double> x) const;
  void invert(std::span<double> x) const;
};

/// eps_uncond + g (eps_cond - eps_uncond), element-wise.
nn::Matrix cfg_combine(const nn::Matrix& eps_uncond, const nn::Matrix& eps_cond, double guidance);

/// Guided noise prediction for rows of `x_t` all at `step` and class `class_id`.
nn::Matrix cfg_predict(const Denoiser& denoiser, const nn::Matrix& x_t, int step, int class_id, double guidance);

/// Frozen class-conditional DDPM in standardized coordinates.
class DiffusionGenerator final : public SampleGenerator {
 public:
  DiffusionGenerator(Denoiser denoiser, NoiseSchedule schedule, Standardizer standardizer, double guidance,
                     double x0_clip);

  int dim() const override { return denoiser_.config().dim; }
  int classes() const override { return denoiser_.config().classes; }
  std::vector<Sample> sample(int class_id, std::size_t n, int domain, RngStream rng) const override;
  std::uint64_t checksum() const override;

  const Denoiser& denoiser() const { return denoiser_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Standardizer& standardizer() const { return standardizer_; }
  double guidance() const { return guidance_; }
  double x0_clip() const { return x0_clip_; }
  DiffusionGenerator with_guidance(double guidance) const;

  /// Ancestral reverse process in standardized space, starting from `x_T`.
  nn::Matrix denoise(nn::Matrix x_T, int class_id, RngStream& rng) const;

 private:
  Denoiser denoiser_;
  NoiseSchedule schedule_;
  Standardizer standardizer_;
  double guidance_;
  double x0_clip_;
};

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  DiffusionBatch first_batch;      // as drawn, in standardized space
  double first_batch_loss = 0.0;   // loss of the untrained model on it
  std::size_t examples = 0;
  std::size_t dropped = 0;         // examples whose condition was nulled
};

/// Trains the denoiser on `data` (which must contain every class) with the
/// MSE + L1 noise-prediction loss and Adam updates, then freezes it.
DiffusionGenerator train_generator(const Dataset& data, const GeneratorConfig& config, RngStream rng,
                                   TrainingLog* log = nullptr);

}  // namespace fedssg::gen
