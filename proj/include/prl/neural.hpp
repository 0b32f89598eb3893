#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "prl/rng.hpp"
#include "prl/tensor.hpp"

namespace prl {

enum class Activation : std::uint8_t { linear = 0, relu = 1, tanh = 2, sigmoid = 3, softmax = 4 };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// One fully-connected layer: y = act(x·W + b). `dropout` is applied to this
/// layer's output during training (inverted dropout) and is not allowed on the
/// final layer of a network.
struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::linear;
  double dropout = 0.0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Mode { train, eval };

/// Fully-connected network. Weights are in_dim×out_dim, biases 1×out_dim.
/// Any mutation bumps `revision()` so tapes recorded before the change are
/// rejected by backward().
class Network {
 public:
  Network() = default;
  /// Zero-initialized parameters; validates the layer chain.
  Network(std::vector<LayerSpec> layers, double l2);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  double l2() const noexcept { return l2_; }
  void set_l2(double l2);

  const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
  const Matrix& bias(std::size_t layer) const { return biases_.at(layer); }
  Matrix& mutable_weight(std::size_t layer);
  Matrix& mutable_bias(std::size_t layer);

  std::uint64_t revision() const noexcept { return revision_; }

  /// Same architecture and bitwise-identical parameters.
  friend bool bitwise_equal(const Network& a, const Network& b);

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
  double l2_ = 0.0;
  std::uint64_t revision_ = 0;
};

/// Activation record of one forward pass, consumed by backward().
struct Tape {
  std::vector<Matrix> inputs;   // input to layer ℓ (after the previous layer's dropout)
  std::vector<Matrix> outputs;  // activation output of layer ℓ, before dropout
  std::vector<Matrix> masks;    // inverted-dropout scale per layer; empty when unused
  std::vector<LayerSpec> layers;
  std::uint64_t revision = 0;
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

/// Per-layer parameter gradients plus the gradient with respect to the input batch.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
  Matrix input;
};

/// How backward() interprets the upstream gradient: with respect to the
/// network output, or with respect to the final pre-activation (for fused
/// softmax + cross-entropy, where it is simply ŷ − y).
enum class Upstream { output, logits };

/// rng is required when mode == train and any layer has dropout > 0.
ForwardResult forward(const Network& net, const Matrix& batch, Mode mode, RngStream* rng = nullptr);
/// Eval-mode forward without keeping a tape.
Matrix predict(const Network& net, const Matrix& batch);

/// Gradients of loss + l2·‖W‖²/2 (weights only, not biases).
Gradients backward(const Network& net, const Tape& tape, const Matrix& upstream,
                   Upstream kind = Upstream::output);

/// l2·Σ‖W‖²/2, the penalty whose gradient backward() adds.
double l2_penalty(const Network& net);

/// p ← p − lr·g for every parameter. Throws unless lr > 0 and shapes match.
void sgd_step(Network& net, const Gradients& grads, double lr);

/// Xavier-uniform weights, U(−s, s) with s = sqrt(6/(in+out)); zero biases.
Network init_network(const std::vector<LayerSpec>& layers, double l2, RngStream& rng);

/// Builds a chain of layers: hidden layers with `hidden_activation` and
/// `dropout`, then one output layer with `output_activation` and no dropout.
std::vector<LayerSpec> mlp_layers(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim,
                                  Activation hidden_activation, Activation output_activation, double dropout);

/// Canonical parameter vector: layer order, weights row-major then biases.
std::vector<double> flatten_params(const Network& net);
void unflatten_params(Network& net, std::span<const double> params);

struct ParamLocation {
  std::size_t layer = 0;
  bool is_bias = false;
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const ParamLocation&, const ParamLocation&) = default;
};

ParamLocation locate_param(const Network& net, std::size_t index);
std::size_t param_index(const Network& net, const ParamLocation& loc);

/// "PRLF" checkpoint: magic, u32 version, u32 layer count, per layer
/// (u32 in, u32 out, u8 activation, f64 dropout), then parameters in canonical
/// order as little-endian f64. The L2 coefficient is a training setting and
/// is not stored.
void save_network(std::ostream& os, const Network& net);
Network load_network(std::istream& is);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace prl
