#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/nn/matrix.hpp"

namespace fedssg::nn {

enum class Activation { ReLU, SiLU, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Multilayer perceptron split into a feature trunk and a classification head.
///
/// Trunk layers are `Dense -> activation`. Head hidden layers are
/// `Dense -> per-sample standardization (learnable scale/shift) -> activation
/// -> inverted dropout`. A final Dense maps to `output_dim`. The "features"
/// of a forward pass are the trunk output (the input itself when the trunk is
/// empty).
struct MlpTopology {
  int input_dim = 0;
  std::vector<int> trunk;
  std::vector<int> head;
  int output_dim = 0;
  Activation activation = Activation::ReLU;
  double dropout = 0.0;
  bool head_norm = true;

  void validate() const;
  std::size_t param_count() const;
  std::size_t trunk_param_count() const;
  int feature_dim() const { return trunk.empty() ? input_dim : trunk.back(); }

  friend bool operator==(const MlpTopology&, const MlpTopology&) = default;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Flat parameter vector with the topology it belongs to. The trunk span is
/// a prefix of `values`; the head span is the remainder.
struct ParamVector {
  MlpTopology topology;
  std::vector<double> values;

  static ParamVector zeros(const MlpTopology& topology);

  IndexRange trunk_span() const { return {0, topology.trunk_param_count()}; }
  IndexRange head_span() const { return {topology.trunk_param_count(), values.size()}; }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// He-normal weights, zero biases, unit norm scales.
ParamVector init_params(const MlpTopology& topology, RngStream rng);

/// 64-bit FNV-1a over the raw bytes of the values.
std::uint64_t checksum(std::span<const double> values);

enum class Mode { Train, Eval };

struct LayerTrace {
  Matrix input;
  Matrix pre;      // Dense output
  Matrix normed;   // standardized pre (head layers with norm)
  std::vector<double> inv_std;
  Matrix act_in;   // activation input
  Matrix output;   // layer output after activation and dropout
  Matrix mask;     // dropout scale per element (empty when unused)
};

/// Result of a forward pass; keeps what backward needs.
struct ForwardPass {
  Matrix logits;
  Matrix features;
  std::vector<LayerTrace> hidden;  // trunk layers then head hidden layers
  Matrix last_input;               // input of the output Dense
};

/// Evaluates the network on a batch (one row per item). Dropout is active
/// only in Train mode and draws its masks from `rng`, which is required then.
ForwardPass forward(const MlpTopology& topology, std::span<const double> params, const Matrix& inputs, Mode mode,
                    RngStream* rng = nullptr);

ForwardPass forward(const ParamVector& params, std::span<const Sample> batch, Mode mode, RngStream* rng = nullptr);

/// Reverse-mode gradient. `grad_logits` is dLoss/dlogits; `grad_features`
/// (optional) is an extra dLoss/dfeatures injected at the trunk output.
/// Gradients are accumulated into `grad_params`. When `grad_inputs` is given
/// it receives dLoss/dinputs.
void backward(const MlpTopology& topology, std::span<const double> params, const ForwardPass& pass,
              const Matrix& grad_logits, const Matrix* grad_features, std::span<double> grad_params,
              Matrix* grad_inputs = nullptr);

struct Batch {
  Matrix inputs;
  std::vector<int> labels;
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);
Batch make_batch(std::span<const Sample> samples);

}  // namespace fedssg::nn
