#pragma once

#include <span>
#include <string>

#include "fedssg/core/rng.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::fed {

enum class Strategy { FedAvg, FedProx, Moon };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

struct ObjectiveConfig {
  Strategy strategy = Strategy::FedAvg;
  double prox_mu = 0.01;
  double moon_mu = 1.0;
  double moon_tau = 0.5;

  friend bool operator==(const ObjectiveConfig&, const ObjectiveConfig&) = default;
};

/// Reference representations for the model-contrastive term: trunk features
/// of the frozen global model and of the client's previous local model on
/// the same batch rows.
struct ContrastiveRefs {
  nn::Matrix z_global;
  nn::Matrix z_previous;
};

struct ObjectiveValue {
  double total = 0.0;
  double cross_entropy = 0.0;
  double proximal = 0.0;
  double contrastive = 0.0;
};

/// cos(a, b) = a.b / max(|a| |b|, 1e-8).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Mean over rows of -log(exp(s_g/tau) / (exp(s_g/tau) + exp(s_p/tau))) with
/// s_g = cos(z, z_global), s_p = cos(z, z_previous). When `grad_z` is given
/// it receives the gradient with respect to z.
double contrastive_loss(const nn::Matrix& z, const nn::Matrix& z_global, const nn::Matrix& z_previous, double tau,
                        nn::Matrix* grad_z = nullptr);

/// Local objective of one strategy on one batch:
///   FedAvg:  CE
///   FedProx: CE + (mu/2) |theta - anchor|^2
///   MOON:    CE + mu * contrastive
/// Terms whose coefficient is zero are skipped entirely, so a zero-mu
/// FedProx or MOON objective performs exactly the FedAvg arithmetic. The
/// gradient is accumulated into `grad` (which must be zeroed by the caller).
ObjectiveValue local_objective(const nn::MlpTopology& topology, std::span<const double> params,
                               const nn::Matrix& inputs, std::span<const int> labels, const ObjectiveConfig& config,
                               std::span<const double> anchor, const ContrastiveRefs* refs, nn::Mode mode,
                               RngStream* rng, std::span<double> grad);

}  // namespace fedssg::fed
