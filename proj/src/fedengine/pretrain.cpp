#include "fedssg/fedengine/pretrain.hpp"

#include <cmath>

#include "fedssg/core/error.hpp"
#include "fedssg/datasynth/sampler.hpp"
#include "fedssg/metrics/metrics.hpp"
#include "fedssg/nn/loss.hpp"

namespace fedssg::fed {

nn::ParamVector initial_params(const nn::MlpTopology& topology, RngStream rng) {
  return nn::init_params(topology, rng.derive("init"));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const Dataset& data,
                                                                               double val_fraction, RngStream rng) {
  require(val_fraction >= 0.0 && val_fraction < 1.0, "stratified_split: fraction must be in [0,1)");
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  auto by_class = data.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    RngStream r = rng.derive(static_cast<std::uint64_t>(c));
    r.shuffle(idx);
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    if (val_fraction > 0.0 && idx.size() >= 2) n_val = std::max<std::size_t>(n_val, 1);
    n_val = std::min(n_val, idx.size() > 0 ? idx.size() - 1 : 0);
    val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  return {train, val};
}

namespace {

double validation_loss(const nn::ParamVector& p, const Dataset& val) {
  const auto batch = nn::make_batch(std::span<const Sample>(val.samples()));
  const auto pass = nn::forward(p.topology, p.values, batch.inputs, nn::Mode::Eval);
  return nn::cross_entropy(pass.logits, batch.labels).loss;
}

}  // namespace

PretrainResult pretrain(const Dataset& public_data, const nn::MlpTopology& topology, const PretrainConfig& config,
                        RngStream rng) {
  require(!public_data.is_empty(), "pretrain: empty public data");
  for (std::size_t c = 0; c < public_data.class_counts().size(); ++c)
    require(public_data.class_counts()[c] > 0, "pretrain: public data lacks class " + std::to_string(c));
  require(config.batch_size >= 1 && config.max_epochs >= 0, "pretrain: invalid batch size or epoch count");

  PretrainResult result;
  result.params = initial_params(topology, rng);
  auto [train_idx, val_idx] = stratified_split(public_data, config.val_fraction, rng.derive("split"));
  const Dataset train = public_data.subset(train_idx);
  const Dataset val = val_idx.empty() ? train : public_data.subset(val_idx);

  nn::ParamVector params = result.params;
  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::AdamW;
  oc.weight_decay = config.weight_decay;
  auto opt = nn::Optimizer::for_classifier(oc, params, config.trunk_lr, config.head_lr);
  nn::PlateauScheduler scheduler(config.plateau);
  datasynth::ClassBalancedSampler sampler(train, config.batch_size, rng.derive("sampler"));
  RngStream dropout_rng = rng.derive("dropout");
  const std::size_t batches = (train.size() + config.batch_size - 1) / config.batch_size;

  double best = INFINITY;
  int since_best = 0;
  std::vector<double> grad(params.values.size());
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t b = 0; b < batches; ++b) {
      const auto idx = sampler.next_batch();
      const auto batch = nn::make_batch(train, idx);
      const auto pass = nn::forward(params.topology, params.values, batch.inputs, nn::Mode::Train, &dropout_rng);
      const auto ce = nn::cross_entropy(pass.logits, batch.labels);
      std::fill(grad.begin(), grad.end(), 0.0);
      nn::backward(params.topology, params.values, pass, ce.grad, nullptr, grad);
      opt.step(params.values, grad);
    }
    const double loss = validation_loss(params, val);
    result.val_loss.push_back(loss);
    const auto pred = metrics::predict(params, val);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < val.size(); ++i) hits += pred[i] == val[i].label ? 1 : 0;
    result.val_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(val.size()));
    scheduler.step(loss, opt);
    if (loss < best) {
      best = loss;
      since_best = 0;
      result.params = params;
      result.best_epoch = epoch;
    } else if (++since_best >= config.early_stopping_patience) {
      break;
    }
  }
  return result;
}

nn::ParamVector initial_global_model(const Dataset& public_data, const nn::MlpTopology& topology,
                                     const PretrainConfig& config, bool use_pretraining, RngStream rng) {
  if (!use_pretraining) return initial_params(topology, rng);
  return pretrain(public_data, topology, config, rng).params;
}

}  // namespace fedssg::fed
