#pragma once

#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/nn/mlp.hpp"
#include "fedssg/nn/optimizer.hpp"

namespace fedssg::fed {

struct PretrainConfig {
  int max_epochs = 30;
  std::size_t batch_size = 32;
  double head_lr = 1e-3;
  double trunk_lr = 1e-4;
  double weight_decay = 1e-4;
  int early_stopping_patience = 5;
  double val_fraction = 0.10;
  nn::PlateauScheduler::Config plateau{};

  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct PretrainResult {
  nn::ParamVector params;             // best validation-loss parameters
  std::vector<double> val_loss;       // per completed epoch
  std::vector<double> val_accuracy;
  int best_epoch = -1;                // -1 when no epoch ran
};

/// Random initialization shared by the pretrained and scratch paths.
nn::ParamVector initial_params(const nn::MlpTopology& topology, RngStream rng);

/// Splits each class of `data` into train and validation parts, putting
/// round(val_fraction * n_c) samples (at least one when n_c >= 2) into
/// validation. Returns (train indices, validation indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const Dataset& data,
                                                                               double val_fraction, RngStream rng);

/// Supervised training on public data starting from initial_params:
/// class-balanced batches, AdamW with separate trunk/head learning rates,
/// plateau learning-rate reduction and early stopping on validation loss.
PretrainResult pretrain(const Dataset& public_data, const nn::MlpTopology& topology, const PretrainConfig& config,
                        RngStream rng);

/// pretrain(...).params when `use_pretraining`, otherwise the untouched
/// random initialization.
nn::ParamVector initial_global_model(const Dataset& public_data, const nn::MlpTopology& topology,
                                     const PretrainConfig& config, bool use_pretraining, RngStream rng);

}  // namespace fedssg::fed
