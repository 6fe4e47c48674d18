#include "fedssg/nn/mlp.hpp"

#include <cmath>
#include <cstring>

#include "fedssg/core/error.hpp"
#include "fedssg/kernels/kernels.hpp"

namespace fedssg::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::SiLU: return "silu";
    case Activation::Identity: return "identity";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "silu") return Activation::SiLU;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

constexpr double kNormEps = 1e-5;

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight = 0;  // offset of W (out x in)
  std::size_t bias = 0;
  std::size_t gamma = 0;   // valid when norm
  std::size_t beta = 0;
  bool norm = false;
  bool dropout = false;
};

struct Layout {
  std::vector<LayerSpec> hidden;
  LayerSpec output;
  std::size_t trunk_layers = 0;
  std::size_t trunk_params = 0;
  std::size_t total = 0;
};

Layout layout_of(const MlpTopology& t) {
  Layout l;
  std::size_t offset = 0;
  std::size_t prev = static_cast<std::size_t>(t.input_dim);
  auto dense = [&](std::size_t out) {
    LayerSpec s;
    s.in = prev;
    s.out = out;
    s.weight = offset;
    offset += prev * out;
    s.bias = offset;
    offset += out;
    prev = out;
    return s;
  };
  for (int w : t.trunk) l.hidden.push_back(dense(static_cast<std::size_t>(w)));
  l.trunk_layers = l.hidden.size();
  l.trunk_params = offset;
  for (int w : t.head) {
    LayerSpec s = dense(static_cast<std::size_t>(w));
    if (t.head_norm) {
      s.norm = true;
      s.gamma = offset;
      offset += s.out;
      s.beta = offset;
      offset += s.out;
    }
    s.dropout = t.dropout > 0.0;
    l.hidden.push_back(s);
  }
  l.output = dense(static_cast<std::size_t>(t.output_dim));
  l.total = offset;
  return l;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::SiLU: return z / (1.0 + std::exp(-z));
    case Activation::Identity: return z;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::SiLU: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 + z * (1.0 - s));
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

std::span<const double> slice(std::span<const double> p, std::size_t off, std::size_t n) { return p.subspan(off, n); }
std::span<double> slice(std::span<double> p, std::size_t off, std::size_t n) { return p.subspan(off, n); }

}  // namespace

void MlpTopology::validate() const {
  require(input_dim >= 1, "topology: input_dim must be >= 1");
  require(output_dim >= 1, "topology: output_dim must be >= 1");
  for (int w : trunk) require(w >= 1, "topology: trunk widths must be >= 1");
  for (int w : head) require(w >= 1, "topology: head widths must be >= 1");
  require(dropout >= 0.0 && dropout < 1.0, "topology: dropout must be in [0, 1)");
}

std::size_t MlpTopology::param_count() const { return layout_of(*this).total; }
std::size_t MlpTopology::trunk_param_count() const { return layout_of(*this).trunk_params; }

ParamVector ParamVector::zeros(const MlpTopology& topology) {
  topology.validate();
  return ParamVector{topology, std::vector<double>(topology.param_count(), 0.0)};
}

ParamVector init_params(const MlpTopology& topology, RngStream rng) {
  ParamVector p = ParamVector::zeros(topology);
  const Layout l = layout_of(topology);
  auto init_dense = [&](const LayerSpec& s, double gain) {
    const double stddev = std::sqrt(gain / static_cast<double>(s.in));
    for (std::size_t i = 0; i < s.in * s.out; ++i) p.values[s.weight + i] = rng.normal() * stddev;
  };
  for (const auto& s : l.hidden) {
    init_dense(s, 2.0);
    if (s.norm) {
      for (std::size_t i = 0; i < s.out; ++i) p.values[s.gamma + i] = 1.0;
    }
  }
  init_dense(l.output, 1.0);
  return p;
}

std::uint64_t checksum(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

ForwardPass forward(const MlpTopology& topology, std::span<const double> params, const Matrix& inputs, Mode mode,
                    RngStream* rng) {
  const Layout l = layout_of(topology);
  if (params.size() != l.total) {
    throw ConfigError("forward: parameter count " + std::to_string(params.size()) + " does not match topology (" +
                      std::to_string(l.total) + ")");
  }
  if (inputs.cols != static_cast<std::size_t>(topology.input_dim)) {
    throw ConfigError("forward: input dimension " + std::to_string(inputs.cols) + " does not match topology (" +
                      std::to_string(topology.input_dim) + ")");
  }
  require(inputs.rows > 0, "forward: empty batch");

  ForwardPass pass;
  pass.hidden.resize(l.hidden.size());
  const Matrix* x = &inputs;
  const double keep = 1.0 - topology.dropout;

  if (l.trunk_layers == 0) pass.features = inputs;

  for (std::size_t k = 0; k < l.hidden.size(); ++k) {
    const LayerSpec& s = l.hidden[k];
    LayerTrace& tr = pass.hidden[k];
    tr.input = *x;
    kernels::affine_forward(tr.input, slice(params, s.weight, s.in * s.out), slice(params, s.bias, s.out), tr.pre);
    const std::size_t rows = tr.pre.rows;
    if (s.norm) {
      tr.normed = Matrix(rows, s.out);
      tr.act_in = Matrix(rows, s.out);
      tr.inv_std.assign(rows, 0.0);
      const auto gamma = slice(params, s.gamma, s.out);
      const auto beta = slice(params, s.beta, s.out);
      for (std::size_t r = 0; r < rows; ++r) {
        auto row = tr.pre.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(s.out);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(s.out);
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        tr.inv_std[r] = inv;
        for (std::size_t j = 0; j < s.out; ++j) {
          const double xh = (row[j] - mean) * inv;
          tr.normed(r, j) = xh;
          tr.act_in(r, j) = gamma[j] * xh + beta[j];
        }
      }
    } else {
      tr.act_in = tr.pre;
    }
    tr.output = Matrix(rows, s.out);
    for (std::size_t i = 0; i < tr.output.data.size(); ++i) {
      tr.output.data[i] = activate(topology.activation, tr.act_in.data[i]);
    }
    if (s.dropout && mode == Mode::Train) {
      require(rng != nullptr, "forward: train-mode dropout needs an rng stream");
      tr.mask = Matrix(rows, s.out);
      for (std::size_t i = 0; i < tr.mask.data.size(); ++i) {
        tr.mask.data[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
        tr.output.data[i] *= tr.mask.data[i];
      }
    }
    x = &tr.output;
    if (k + 1 == l.trunk_layers) pass.features = tr.output;
  }

  pass.last_input = *x;
  kernels::affine_forward(pass.last_input, slice(params, l.output.weight, l.output.in * l.output.out),
                          slice(params, l.output.bias, l.output.out), pass.logits);
  return pass;
}

ForwardPass forward(const ParamVector& params, std::span<const Sample> batch, Mode mode, RngStream* rng) {
  Batch b = make_batch(batch);
  return forward(params.topology, params.values, b.inputs, mode, rng);
}

void backward(const MlpTopology& topology, std::span<const double> params, const ForwardPass& pass,
              const Matrix& grad_logits, const Matrix* grad_features, std::span<double> grad_params,
              Matrix* grad_inputs) {
  const Layout l = layout_of(topology);
  require(params.size() == l.total && grad_params.size() == l.total, "backward: parameter count mismatch");
  require(grad_logits.rows == pass.logits.rows && grad_logits.cols == pass.logits.cols,
          "backward: gradient shape mismatch");

  kernels::affine_backward_params(pass.last_input, grad_logits,
                                  slice(grad_params, l.output.weight, l.output.in * l.output.out),
                                  slice(grad_params, l.output.bias, l.output.out));
  Matrix grad;
  kernels::affine_backward_input(grad_logits, slice(params, l.output.weight, l.output.in * l.output.out), grad);

  auto inject_features = [&](Matrix& g) {
    if (grad_features == nullptr) return;
    require(grad_features->rows == g.rows && grad_features->cols == g.cols, "backward: feature gradient shape");
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += grad_features->data[i];
  };
  if (l.trunk_layers == l.hidden.size()) inject_features(grad);

  for (std::size_t k = l.hidden.size(); k-- > 0;) {
    const LayerSpec& s = l.hidden[k];
    const LayerTrace& tr = pass.hidden[k];
    const std::size_t rows = tr.pre.rows;
    if (!tr.mask.data.empty()) {
      for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= tr.mask.data[i];
    }
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
      grad.data[i] *= activate_grad(topology.activation, tr.act_in.data[i]);
    }
    if (s.norm) {
      const auto gamma = slice(params, s.gamma, s.out);
      auto dgamma = slice(grad_params, s.gamma, s.out);
      auto dbeta = slice(grad_params, s.beta, s.out);
      for (std::size_t j = 0; j < s.out; ++j) {
        double gg = 0.0;
        double gb = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          gg += grad(r, j) * tr.normed(r, j);
          gb += grad(r, j);
        }
        dgamma[j] += gg;
        dbeta[j] += gb;
      }
      const double n = static_cast<double>(s.out);
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_dx = 0.0;
        double mean_dx_xh = 0.0;
        for (std::size_t j = 0; j < s.out; ++j) {
          const double dxh = grad(r, j) * gamma[j];
          mean_dx += dxh;
          mean_dx_xh += dxh * tr.normed(r, j);
        }
        mean_dx /= n;
        mean_dx_xh /= n;
        for (std::size_t j = 0; j < s.out; ++j) {
          const double dxh = grad(r, j) * gamma[j];
          grad(r, j) = tr.inv_std[r] * (dxh - mean_dx - tr.normed(r, j) * mean_dx_xh);
        }
      }
    }
    kernels::affine_backward_params(tr.input, grad, slice(grad_params, s.weight, s.in * s.out),
                                    slice(grad_params, s.bias, s.out));
    Matrix next;
    if (k > 0 || grad_inputs != nullptr) {
      kernels::affine_backward_input(grad, slice(params, s.weight, s.in * s.out), next);
    }
    grad = std::move(next);
    if (k == l.trunk_layers && k > 0) inject_features(grad);
  }
  if (grad_inputs != nullptr) {
    if (l.trunk_layers == 0 && !l.hidden.empty()) inject_features(grad);
    *grad_inputs = std::move(grad);
  }
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  Batch b{Matrix(indices.size(), static_cast<std::size_t>(data.dim())), std::vector<int>(indices.size())};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Sample& s = data[indices[r]];
    std::copy(s.features.begin(), s.features.end(), b.inputs.row(r).begin());
    b.labels[r] = s.label;
  }
  return b;
}

Batch make_batch(std::span<const Sample> samples) {
  require(!samples.empty(), "make_batch: empty batch");
  const std::size_t dim = samples.front().features.size();
  Batch b{Matrix(samples.size(), dim), std::vector<int>(samples.size())};
  for (std::size_t r = 0; r < samples.size(); ++r) {
    require(samples[r].features.size() == dim, "make_batch: ragged feature dimensions");
    std::copy(samples[r].features.begin(), samples[r].features.end(), b.inputs.row(r).begin());
    b.labels[r] = samples[r].label;
  }
  return b;
}

}  // namespace fedssg::nn
