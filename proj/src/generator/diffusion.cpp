#include "fedssg/generator/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedssg/core/error.hpp"
#include "fedssg/nn/optimizer.hpp"

namespace fedssg::gen {

Standardizer Standardizer::fit(const Dataset& data) {
  require(!data.is_empty(), "standardizer: empty dataset");
  const std::size_t d = static_cast<std::size_t>(data.dim());
  const double n = static_cast<double>(data.size());
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& x : data.samples())
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += x.features[k];
  for (auto& m : s.mean) m /= n;
  for (const auto& x : data.samples())
    for (std::size_t k = 0; k < d; ++k) s.scale[k] += (x.features[k] - s.mean[k]) * (x.features[k] - s.mean[k]);
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dim) {
  return {std::vector<double>(static_cast<std::size_t>(dim), 0.0), std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
}

void Standardizer::apply(std::span<double> x) const {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - mean[k]) / scale[k];
}

void Standardizer::invert(std::span<double> x) const {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = x[k] * scale[k] + mean[k];
}

nn::Matrix cfg_combine(const nn::Matrix& eps_uncond, const nn::Matrix& eps_cond, double guidance) {
  require(eps_uncond.rows == eps_cond.rows && eps_uncond.cols == eps_cond.cols, "cfg: shape mismatch");
  nn::Matrix out(eps_cond.rows, eps_cond.cols);
  // Written so that g = 0 and g = 1 reproduce the inputs bit for bit.
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double u = eps_uncond.data[i];
    const double c = eps_cond.data[i];
    out.data[i] = guidance == 1.0 ? c : u + guidance * (c - u);
  }
  return out;
}

nn::Matrix cfg_predict(const Denoiser& denoiser, const nn::Matrix& x_t, int step, int class_id, double guidance) {
  require(class_id >= 0 && class_id < denoiser.config().classes, "cfg_predict: class id out of range");
  const std::size_t n = x_t.rows;
  // Conditional and unconditional rows go through the network in one batch.
  nn::Matrix both(2 * n, x_t.cols);
  std::copy(x_t.data.begin(), x_t.data.end(), both.data.begin());
  std::copy(x_t.data.begin(), x_t.data.end(), both.data.begin() + static_cast<std::ptrdiff_t>(x_t.data.size()));
  std::vector<int> steps(2 * n, step);
  std::vector<int> ids(2 * n, class_id);
  std::fill(ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), denoiser.null_class());
  const nn::Matrix eps = denoiser.predict(both, steps, ids);
  nn::Matrix cond(n, x_t.cols);
  nn::Matrix uncond(n, x_t.cols);
  std::copy(eps.data.begin(), eps.data.begin() + static_cast<std::ptrdiff_t>(cond.data.size()), cond.data.begin());
  std::copy(eps.data.begin() + static_cast<std::ptrdiff_t>(cond.data.size()), eps.data.end(), uncond.data.begin());
  return cfg_combine(uncond, cond, guidance);
}

DiffusionGenerator::DiffusionGenerator(Denoiser denoiser, NoiseSchedule schedule, Standardizer standardizer,
                                       double guidance, double x0_clip)
    : denoiser_(std::move(denoiser)),
      schedule_(std::move(schedule)),
      standardizer_(std::move(standardizer)),
      guidance_(guidance),
      x0_clip_(x0_clip) {
  require(guidance_ >= 0.0, "generator: guidance scale must be nonnegative");
  require(x0_clip_ > 0.0, "generator: clip bound must be positive");
  require(standardizer_.mean.size() == static_cast<std::size_t>(dim()) &&
              standardizer_.scale.size() == static_cast<std::size_t>(dim()),
          "generator: standardizer dimension mismatch");
}

DiffusionGenerator DiffusionGenerator::with_guidance(double guidance) const {
  return DiffusionGenerator(denoiser_, schedule_, standardizer_, guidance, x0_clip_);
}

nn::Matrix DiffusionGenerator::denoise(nn::Matrix x, int class_id, RngStream& rng) const {
  const auto& ab = schedule_.alpha_bar;
  for (int t = schedule_.steps; t >= 1; --t) {
    const auto i = static_cast<std::size_t>(t);
    const nn::Matrix eps = cfg_predict(denoiser_, x, t, class_id, guidance_);
    const double sab = std::sqrt(ab[i]);
    const double snab = std::sqrt(1.0 - ab[i]);
    // Posterior q(x_{t-1} | x_t, x0) evaluated at the clipped x0 estimate.
    const double c0 = schedule_.beta[i] * std::sqrt(ab[i - 1]) / (1.0 - ab[i]);
    const double ct = (1.0 - ab[i - 1]) * std::sqrt(schedule_.alpha[i]) / (1.0 - ab[i]);
    const double sigma = std::sqrt(schedule_.beta[i]);
    for (std::size_t k = 0; k < x.data.size(); ++k) {
      const double x0 = std::clamp((x.data[k] - snab * eps.data[k]) / sab, -x0_clip_, x0_clip_);
      double next = c0 * x0 + ct * x.data[k];
      if (t > 1) next += sigma * rng.normal();
      x.data[k] = next;
    }
  }
  return x;
}

std::vector<Sample> DiffusionGenerator::sample(int class_id, std::size_t n, int domain, RngStream rng) const {
  require(class_id >= 0 && class_id < classes(), "generator: class id out of range");
  std::vector<Sample> out;
  if (n == 0) return out;
  const std::size_t d = static_cast<std::size_t>(dim());
  nn::Matrix x(n, d);
  for (double& v : x.data) v = rng.normal();
  x = denoise(std::move(x), class_id, rng);
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> f(x.row(r).begin(), x.row(r).end());
    standardizer_.invert(f);
    out.push_back(Sample{std::move(f), class_id, domain});
  }
  return out;
}

std::uint64_t DiffusionGenerator::checksum() const {
  std::vector<double> all(denoiser_.params().begin(), denoiser_.params().end());
  all.insert(all.end(), schedule_.alpha_bar.begin(), schedule_.alpha_bar.end());
  all.insert(all.end(), standardizer_.mean.begin(), standardizer_.mean.end());
  all.insert(all.end(), standardizer_.scale.begin(), standardizer_.scale.end());
  all.push_back(guidance_);
  all.push_back(x0_clip_);
  return nn::checksum(all);
}

DiffusionGenerator train_generator(const Dataset& data, const GeneratorConfig& config, RngStream rng,
                                   TrainingLog* log) {
  require(!data.is_empty(), "train_generator: empty training data");
  for (std::size_t c = 0; c < data.class_counts().size(); ++c)
    require(data.class_counts()[c] > 0, "train_generator: class " + std::to_string(c) + " has no samples");
  require(config.epochs >= 0 && config.batch_size >= 1, "train_generator: invalid epochs or batch size");
  require(config.ema_decay >= 0.0 && config.ema_decay < 1.0, "train_generator: ema_decay must be in [0,1)");
  require(config.cond_drop >= 0.0 && config.cond_drop <= 1.0, "train_generator: cond_drop must be in [0,1]");

  const std::size_t d = static_cast<std::size_t>(data.dim());
  const Standardizer standardizer = Standardizer::fit(data);
  nn::Matrix x0_all(data.size(), d);
  std::vector<int> labels(data.size());
  double max_abs = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto row = x0_all.row(r);
    std::copy(data[r].features.begin(), data[r].features.end(), row.begin());
    standardizer.apply(row);
    for (double v : row) max_abs = std::max(max_abs, std::abs(v));
    labels[r] = data[r].label;
  }

  DenoiserConfig dc;
  dc.dim = data.dim();
  dc.classes = data.classes();
  dc.time_embed_dim = config.time_embed_dim;
  dc.class_embed_dim = config.class_embed_dim;
  dc.hidden = config.hidden;
  Denoiser model = Denoiser::initialize(dc, rng.derive("init"));
  const NoiseSchedule schedule = cosine_schedule(config.steps);

  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::AdamW;
  oc.weight_decay = 0.0;
  oc.grad_clip_norm = config.grad_clip;
  nn::Optimizer opt = nn::Optimizer::single_group(oc, model.param_count(), config.learning_rate);

  RngStream order_rng = rng.derive("order");
  RngStream noise_rng = rng.derive("noise");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> ema(model.params().begin(), model.params().end());
  double updates = 0.0;
  bool first = true;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      nn::Matrix x0(end - start, d);
      std::vector<int> y(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::copy(x0_all.row(order[i]).begin(), x0_all.row(order[i]).end(), x0.row(i - start).begin());
        y[i - start] = labels[order[i]];
      }
      DiffusionBatch batch = draw_training_batch(schedule, x0, y, model.null_class(), config.cond_drop, noise_rng);
      auto lg = diffusion_loss(model, model.params(), batch);
      if (log) {
        log->examples += batch.class_ids.size();
        log->dropped += static_cast<std::size_t>(
            std::count(batch.class_ids.begin(), batch.class_ids.end(), model.null_class()));
        if (first) {
          log->first_batch = batch;
          log->first_batch_loss = lg.loss;
        }
      }
      first = false;
      opt.step(model.mutable_params(), lg.grad);
      // Warmup keeps short runs from averaging in the initialization.
      const double decay = std::min(config.ema_decay, (1.0 + updates) / (10.0 + updates));
      ++updates;
      const auto& p = model.mutable_params();
      for (std::size_t i = 0; i < ema.size(); ++i) ema[i] = decay * ema[i] + (1.0 - decay) * p[i];
      total += lg.loss;
      ++batches;
    }
    if (log) log->epoch_loss.push_back(batches ? total / batches : 0.0);
  }
  if (config.ema_decay > 0.0) model.mutable_params() = std::move(ema);
  const double clip = config.x0_clip_factor * std::max(max_abs, 1.0);
  return DiffusionGenerator(std::move(model), schedule, standardizer, config.guidance, clip);
}

}  // namespace fedssg::gen
