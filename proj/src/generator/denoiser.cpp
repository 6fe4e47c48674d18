#include "fedssg/generator/denoiser.hpp"

#include <cmath>

#include "fedssg/core/error.hpp"
#include "fedssg/nn/loss.hpp"

namespace fedssg::gen {

std::vector<double> timestep_embedding(int step, int dim) {
  require(dim >= 2 && dim % 2 == 0, "timestep_embedding: dimension must be even and >= 2");
  const int half = dim / 2;
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[static_cast<std::size_t>(i)] = std::sin(step * freq);
    e[static_cast<std::size_t>(half + i)] = std::cos(step * freq);
  }
  return e;
}

namespace {

nn::MlpTopology topology_for(const DenoiserConfig& c) {
  nn::MlpTopology t;
  t.input_dim = c.dim + c.time_embed_dim + c.class_embed_dim;
  t.trunk = c.hidden;
  t.output_dim = c.dim;
  t.activation = c.activation;
  t.dropout = 0.0;
  t.head_norm = false;
  t.validate();
  return t;
}

}  // namespace

Denoiser::Denoiser(DenoiserConfig config, std::vector<double> params)
    : config_(std::move(config)), topology_(topology_for(config_)), params_(std::move(params)) {
  require(config_.classes >= 1 && config_.class_embed_dim >= 1, "denoiser: classes and embedding size must be positive");
  const std::size_t expected =
      topology_.param_count() + static_cast<std::size_t>((config_.classes + 1) * config_.class_embed_dim);
  require(params_.size() == expected, "denoiser: parameter count does not match configuration");
}

Denoiser Denoiser::initialize(const DenoiserConfig& config, RngStream rng) {
  const auto topo = topology_for(config);
  auto net = nn::init_params(topo, rng.derive("net"));
  std::vector<double> params = std::move(net.values);
  RngStream er = rng.derive("embeddings");
  for (int i = 0; i < (config.classes + 1) * config.class_embed_dim; ++i) params.push_back(er.normal());
  return Denoiser(config, std::move(params));
}

nn::Matrix Denoiser::build_input(std::span<const double> params, const nn::Matrix& x_t, std::span<const int> steps,
                                 std::span<const int> class_ids) const {
  require(x_t.cols == static_cast<std::size_t>(config_.dim), "denoiser: input dimension mismatch");
  require(steps.size() == x_t.rows && class_ids.size() == x_t.rows, "denoiser: one step and class per row");
  const std::size_t d = static_cast<std::size_t>(config_.dim);
  const std::size_t te = static_cast<std::size_t>(config_.time_embed_dim);
  const std::size_t ce = static_cast<std::size_t>(config_.class_embed_dim);
  const std::size_t emb0 = net_param_count();
  nn::Matrix in(x_t.rows, d + te + ce);
  int cached_step = -1;
  std::vector<double> temb;
  for (std::size_t r = 0; r < x_t.rows; ++r) {
    auto row = in.row(r);
    std::copy(x_t.row(r).begin(), x_t.row(r).end(), row.begin());
    if (steps[r] != cached_step) {
      temb = timestep_embedding(steps[r], config_.time_embed_dim);
      cached_step = steps[r];
    }
    std::copy(temb.begin(), temb.end(), row.begin() + static_cast<std::ptrdiff_t>(d));
    const int y = class_ids[r];
    require(y >= 0 && y <= config_.classes, "denoiser: class id out of range");
    const double* e = params.data() + emb0 + static_cast<std::size_t>(y) * ce;
    std::copy(e, e + ce, row.begin() + static_cast<std::ptrdiff_t>(d + te));
  }
  return in;
}

nn::Matrix Denoiser::predict(std::span<const double> params, const nn::Matrix& x_t, std::span<const int> steps,
                             std::span<const int> class_ids) const {
  const nn::Matrix in = build_input(params, x_t, steps, class_ids);
  return nn::forward(topology_, params.first(net_param_count()), in, nn::Mode::Eval).logits;
}

nn::Matrix Denoiser::predict(const nn::Matrix& x_t, std::span<const int> steps, std::span<const int> class_ids) const {
  return predict(params_, x_t, steps, class_ids);
}

DiffusionBatch draw_training_batch(const NoiseSchedule& schedule, const nn::Matrix& x0, std::span<const int> labels,
                                   int null_class, double cond_drop, RngStream& rng) {
  require(labels.size() == x0.rows, "draw_training_batch: one label per row");
  DiffusionBatch b{x0, nn::Matrix(x0.rows, x0.cols), nn::Matrix(x0.rows, x0.cols), std::vector<int>(x0.rows),
                   std::vector<int>(labels.begin(), labels.end())};
  for (std::size_t r = 0; r < x0.rows; ++r) {
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps)));
    b.steps[r] = t;
    const double ab = schedule.alpha_bar[static_cast<std::size_t>(t)];
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    for (std::size_t c = 0; c < x0.cols; ++c) {
      const double eps = rng.normal();
      b.noise(r, c) = eps;
      b.x_t(r, c) = sa * x0(r, c) + sn * eps;
    }
    if (rng.uniform() < cond_drop) b.class_ids[r] = null_class;
  }
  return b;
}

LossAndGrad diffusion_loss(const Denoiser& model, std::span<const double> params, const DiffusionBatch& batch) {
  require(params.size() == model.param_count(), "diffusion_loss: parameter count mismatch");
  const nn::Matrix in = model.build_input(params, batch.x_t, batch.steps, batch.class_ids);
  const std::size_t net_n = model.net_param_count();
  const auto pass = nn::forward(model.topology(), params.first(net_n), in, nn::Mode::Eval);
  const auto l = nn::mse_plus_l1(pass.logits, batch.noise);

  LossAndGrad out{l.loss, std::vector<double>(params.size(), 0.0)};
  nn::Matrix grad_in;
  nn::backward(model.topology(), params.first(net_n), pass, l.grad, nullptr,
               std::span<double>(out.grad).first(net_n), &grad_in);
  const std::size_t ce = static_cast<std::size_t>(model.config().class_embed_dim);
  const std::size_t col0 = static_cast<std::size_t>(model.config().dim + model.config().time_embed_dim);
  for (std::size_t r = 0; r < grad_in.rows; ++r) {
    double* g = out.grad.data() + net_n + static_cast<std::size_t>(batch.class_ids[r]) * ce;
    for (std::size_t k = 0; k < ce; ++k) g[k] += grad_in(r, col0 + k);
  }
  return out;
}

}  // namespace fedssg::gen
