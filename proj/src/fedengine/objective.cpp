#include "fedssg/fedengine/objective.hpp"

#include <cmath>

#include "fedssg/core/error.hpp"
#include "fedssg/nn/loss.hpp"

namespace fedssg::fed {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::FedAvg: return "fedavg";
    case Strategy::FedProx: return "fedprox";
    case Strategy::Moon: return "moon";
  }
  return "fedavg";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "fedavg") return Strategy::FedAvg;
  if (name == "fedprox") return Strategy::FedProx;
  if (name == "moon") return Strategy::Moon;
  throw ConfigError("unknown strategy '" + name + "' (expected fedavg, fedprox or moon)");
}

namespace {

constexpr double kCosEps = 1e-8;

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// d cos(z, y) / dz, accumulated as scale * gradient into out.
void add_cosine_grad(std::span<const double> z, std::span<const double> y, double scale, std::span<double> out) {
  const double nz = norm(z);
  const double ny = norm(y);
  const double denom = nz * ny;
  if (denom > kCosEps) {
    const double c = dot(z, y) / denom;
    for (std::size_t i = 0; i < z.size(); ++i) out[i] += scale * (y[i] / denom - c * z[i] / (nz * nz));
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) out[i] += scale * y[i] / kCosEps;
  }
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine_similarity: length mismatch");
  const double denom = std::max(norm(a) * norm(b), kCosEps);
  return dot(a, b) / denom;
}

double contrastive_loss(const nn::Matrix& z, const nn::Matrix& z_global, const nn::Matrix& z_previous, double tau,
                        nn::Matrix* grad_z) {
  require(tau > 0.0, "contrastive loss: temperature must be positive");
  require(z.rows == z_global.rows && z.rows == z_previous.rows && z.cols == z_global.cols &&
              z.cols == z_previous.cols,
          "contrastive loss: representation shapes differ");
  require(z.rows > 0, "contrastive loss: empty batch");
  if (grad_z) *grad_z = nn::Matrix(z.rows, z.cols);
  const double inv_b = 1.0 / static_cast<double>(z.rows);
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows; ++r) {
    const double sg = cosine_similarity(z.row(r), z_global.row(r));
    const double sp = cosine_similarity(z.row(r), z_previous.row(r));
    // -log(e^{sg/t} / (e^{sg/t} + e^{sp/t})) = softplus((sp - sg) / t)
    const double u = (sp - sg) / tau;
    total += softplus(u);
    if (grad_z) {
      const double du = sigmoid(u) * inv_b / tau;
      add_cosine_grad(z.row(r), z_previous.row(r), du, grad_z->row(r));
      add_cosine_grad(z.row(r), z_global.row(r), -du, grad_z->row(r));
    }
  }
  return total * inv_b;
}

ObjectiveValue local_objective(const nn::MlpTopology& topology, std::span<const double> params,
                               const nn::Matrix& inputs, std::span<const int> labels, const ObjectiveConfig& config,
                               std::span<const double> anchor, const ContrastiveRefs* refs, nn::Mode mode,
                               RngStream* rng, std::span<double> grad) {
  require(grad.size() == params.size(), "local objective: gradient size mismatch");
  const auto pass = nn::forward(topology, params, inputs, mode, rng);
  const auto ce = nn::cross_entropy(pass.logits, labels);
  ObjectiveValue v;
  v.cross_entropy = ce.loss;

  nn::Matrix grad_features;
  const bool use_moon = config.strategy == Strategy::Moon && config.moon_mu != 0.0;
  if (use_moon) {
    require(refs != nullptr, "local objective: MOON needs reference representations");
    v.contrastive = contrastive_loss(pass.features, refs->z_global, refs->z_previous, config.moon_tau, &grad_features);
    for (double& g : grad_features.data) g *= config.moon_mu;
  }
  nn::backward(topology, params, pass, ce.grad, use_moon ? &grad_features : nullptr, grad);

  const bool use_prox = config.strategy == Strategy::FedProx && config.prox_mu != 0.0;
  if (use_prox) {
    require(anchor.size() == params.size(), "local objective: anchor size mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double diff = params[i] - anchor[i];
      sq += diff * diff;
      grad[i] += config.prox_mu * diff;
    }
    v.proximal = 0.5 * config.prox_mu * sq;
  }
  v.total = v.cross_entropy + v.proximal + (use_moon ? config.moon_mu * v.contrastive : 0.0);
  return v;
}

}  // namespace fedssg::fed
