#include "prl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "prl/binary_io.hpp"
#include "prl/errors.hpp"

namespace prl {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::linear, Activation::relu, Activation::tanh, Activation::sigmoid, Activation::softmax}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

void validate_layers(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (s.in_dim == 0 || s.out_dim == 0) throw ConfigError("layer " + std::to_string(l) + " has a zero dimension");
    if (!(s.dropout >= 0.0 && s.dropout < 1.0)) {
      throw ConfigError("layer " + std::to_string(l) + " dropout must be in [0, 1)");
    }
    if (l + 1 < layers.size()) {
      if (s.activation == Activation::softmax) throw ConfigError("softmax is only allowed on the final layer");
      if (layers[l + 1].in_dim != s.out_dim) {
        throw ConfigError("layer chain broken: layer " + std::to_string(l) + " out=" + std::to_string(s.out_dim) +
                          " but layer " + std::to_string(l + 1) + " in=" + std::to_string(layers[l + 1].in_dim));
      }
    } else if (s.dropout != 0.0) {
      throw ConfigError("dropout is not allowed on the final layer");
    }
  }
}

void activate_inplace(Matrix& z, Activation act) {
  auto d = z.data();
  switch (act) {
    case Activation::linear: break;
    case Activation::relu:
      for (auto& x : d) x = x < 0.0 ? 0.0 : x;  // NaN passes through
      break;
    case Activation::tanh:
      for (auto& x : d) x = std::tanh(x);
      break;
    case Activation::sigmoid:
      for (auto& x : d) x = 1.0 / (1.0 + std::exp(-x));
      break;
    case Activation::softmax:
      for (std::size_t i = 0; i < z.rows(); ++i) {
        auto r = z.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double total = 0.0;
        for (auto& x : r) {
          x = std::exp(x - m);
          total += x;
        }
        for (auto& x : r) x /= total;
      }
      break;
  }
}

// Gradient w.r.t. pre-activation given gradient w.r.t. the activation output.
Matrix activation_backward(const Matrix& out, const Matrix& grad, Activation act) {
  Matrix g(out.rows(), out.cols());
  auto a = out.data();
  auto up = grad.data();
  auto dz = g.data();
  switch (act) {
    case Activation::linear:
      std::copy(up.begin(), up.end(), dz.begin());
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < a.size(); ++i) dz[i] = a[i] > 0.0 ? up[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < a.size(); ++i) dz[i] = up[i] * (1.0 - a[i] * a[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < a.size(); ++i) dz[i] = up[i] * a[i] * (1.0 - a[i]);
      break;
    case Activation::softmax:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto ar = out.row(r);
        auto gr = grad.row(r);
        double dot = 0.0;
        for (std::size_t j = 0; j < ar.size(); ++j) dot += ar[j] * gr[j];
        auto zr = g.row(r);
        for (std::size_t j = 0; j < ar.size(); ++j) zr[j] = ar[j] * (gr[j] - dot);
      }
      break;
  }
  return g;
}

}  // namespace

Network::Network(std::vector<LayerSpec> layers, double l2) : layers_(std::move(layers)) {
  validate_layers(layers_);
  set_l2(l2);
  for (const auto& s : layers_) {
    weights_.emplace_back(s.in_dim, s.out_dim);
    biases_.emplace_back(1, s.out_dim);
  }
}

std::size_t Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
std::size_t Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : layers_) n += s.in_dim * s.out_dim + s.out_dim;
  return n;
}

void Network::set_l2(double l2) {
  if (!(l2 >= 0.0)) throw ConfigError("l2 coefficient must be >= 0");
  l2_ = l2;
}

Matrix& Network::mutable_weight(std::size_t layer) {
  ++revision_;
  return weights_.at(layer);
}

Matrix& Network::mutable_bias(std::size_t layer) {
  ++revision_;
  return biases_.at(layer);
}

bool bitwise_equal(const Network& a, const Network& b) {
  if (a.layers_ != b.layers_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (!bitwise_equal(a.weights_[l], b.weights_[l]) || !bitwise_equal(a.biases_[l], b.biases_[l])) return false;
  }
  return true;
}

ForwardResult forward(const Network& net, const Matrix& batch, Mode mode, RngStream* rng) {
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
  ForwardResult res;
  Tape& tape = res.tape;
  tape.layers = net.layers();
  tape.revision = net.revision();
  Matrix x = batch;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& spec = net.layers()[l];
    Matrix z = matmul(x, net.weight(l));
    add_row_inplace(z, net.bias(l));
    activate_inplace(z, spec.activation);
    tape.inputs.push_back(std::move(x));
    Matrix mask;
    Matrix next = z;
    if (mode == Mode::train && spec.dropout > 0.0) {
      if (rng == nullptr) throw std::invalid_argument("forward: train-mode dropout requires an RngStream");
      const double keep = 1.0 - spec.dropout;
      mask = Matrix(z.rows(), z.cols());
      for (auto& m : mask.data()) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
      next = hadamard(z, mask);
    }
    tape.outputs.push_back(std::move(z));
    tape.masks.push_back(std::move(mask));
    x = std::move(next);
  }
  res.output = std::move(x);
  return res;
}

Matrix predict(const Network& net, const Matrix& batch) { return forward(net, batch, Mode::eval).output; }

Gradients backward(const Network& net, const Tape& tape, const Matrix& upstream, Upstream kind) {
  if (tape.layers != net.layers() || tape.outputs.size() != net.depth()) {
    throw std::invalid_argument("backward: tape was recorded on a different network");
  }
  if (tape.revision != net.revision()) {
    throw std::invalid_argument("backward: stale tape (network changed since forward)");
  }
  const Matrix& out = tape.outputs.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ShapeError("backward: upstream " + upstream.shape_string() + " does not match output " + out.shape_string());
  }
  Gradients g;
  g.weights.resize(net.depth());
  g.biases.resize(net.depth());
  Matrix grad = upstream;
  for (std::size_t l = net.depth(); l-- > 0;) {
    const auto& spec = net.layers()[l];
    Matrix dz;
    if (l + 1 == net.depth() && kind == Upstream::logits) {
      dz = std::move(grad);
    } else {
      if (!tape.masks[l].empty()) grad = hadamard(grad, tape.masks[l]);
      dz = activation_backward(tape.outputs[l], grad, spec.activation);
    }
    g.weights[l] = matmul_tn(tape.inputs[l], dz);
    if (net.l2() > 0.0) axpy_inplace(g.weights[l], net.l2(), net.weight(l));
    g.biases[l] = column_sums(dz);
    grad = matmul_nt(dz, net.weight(l));
  }
  g.input = std::move(grad);
  return g;
}

double l2_penalty(const Network& net) {
  double s = 0.0;
  for (std::size_t l = 0; l < net.depth(); ++l)
    for (double w : net.weight(l).data()) s += w * w;
  return 0.5 * net.l2() * s;
}

void sgd_step(Network& net, const Gradients& grads, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: learning rate must be positive");
  if (grads.weights.size() != net.depth() || grads.biases.size() != net.depth()) {
    throw ShapeError("sgd_step: gradient layer count does not match network");
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& gw = grads.weights[l];
    const auto& gb = grads.biases[l];
    if (gw.rows() != net.weight(l).rows() || gw.cols() != net.weight(l).cols() || gb.cols() != net.bias(l).cols() ||
        gb.rows() != 1) {
      throw ShapeError("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    axpy_inplace(net.mutable_weight(l), -lr, grads.weights[l]);
    axpy_inplace(net.mutable_bias(l), -lr, grads.biases[l]);
  }
}

Network init_network(const std::vector<LayerSpec>& layers, double l2, RngStream& rng) {
  Network net(layers, l2);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& s = layers[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
    for (auto& w : net.mutable_weight(l).data()) w = rng.uniform(-bound, bound);
  }
  return net;
}

std::vector<LayerSpec> mlp_layers(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim,
                                  Activation hidden_activation, Activation output_activation, double dropout) {
  std::vector<LayerSpec> layers;
  std::size_t prev = in_dim;
  for (auto h : hidden) {
    layers.push_back({prev, h, hidden_activation, dropout});
    prev = h;
  }
  layers.push_back({prev, out_dim, output_activation, 0.0});
  return layers;
}

std::vector<double> flatten_params(const Network& net) {
  std::vector<double> v;
  v.reserve(net.parameter_count());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    v.insert(v.end(), net.weight(l).data().begin(), net.weight(l).data().end());
    v.insert(v.end(), net.bias(l).data().begin(), net.bias(l).data().end());
  }
  return v;
}

void unflatten_params(Network& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) {
    throw ShapeError("unflatten_params: expected " + std::to_string(net.parameter_count()) + " values, got " +
                     std::to_string(params.size()));
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    for (auto* m : {&net.mutable_weight(l), &net.mutable_bias(l)}) {
      auto d = m->data();
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(pos),
                params.begin() + static_cast<std::ptrdiff_t>(pos + d.size()), d.begin());
      pos += d.size();
    }
  }
}

ParamLocation locate_param(const Network& net, std::size_t index) {
  std::size_t base = 0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& s = net.layers()[l];
    const std::size_t nw = s.in_dim * s.out_dim;
    if (index < base + nw) return {l, false, (index - base) / s.out_dim, (index - base) % s.out_dim};
    if (index < base + nw + s.out_dim) return {l, true, 0, index - base - nw};
    base += nw + s.out_dim;
  }
  throw std::out_of_range("locate_param: index " + std::to_string(index) + " out of range");
}

std::size_t param_index(const Network& net, const ParamLocation& loc) {
  std::size_t base = 0;
  for (std::size_t l = 0; l < loc.layer; ++l) base += net.layers()[l].in_dim * net.layers()[l].out_dim + net.layers()[l].out_dim;
  const auto& s = net.layers().at(loc.layer);
  if (loc.is_bias) return base + s.in_dim * s.out_dim + loc.col;
  return base + loc.row * s.out_dim + loc.col;
}

void save_network(std::ostream& os, const Network& net) {
  io::write_header(os, "PRLF");
  io::write_u32(os, static_cast<std::uint32_t>(net.depth()));
  for (const auto& s : net.layers()) {
    io::write_u32(os, static_cast<std::uint32_t>(s.in_dim));
    io::write_u32(os, static_cast<std::uint32_t>(s.out_dim));
    io::write_u8(os, static_cast<std::uint8_t>(s.activation));
    io::write_f64(os, s.dropout);
  }
  for (double p : flatten_params(net)) io::write_f64(os, p);
}

Network load_network(std::istream& is) {
  io::read_header(is, "PRLF");
  const auto depth = io::read_u32(is);
  std::vector<LayerSpec> layers(depth);
  for (auto& s : layers) {
    s.in_dim = io::read_u32(is);
    s.out_dim = io::read_u32(is);
    const auto tag = io::read_u8(is);
    if (tag > static_cast<std::uint8_t>(Activation::softmax)) throw DataError("checkpoint: bad activation tag");
    s.activation = static_cast<Activation>(tag);
    s.dropout = io::read_f64(is);
  }
  Network net(std::move(layers), 0.0);
  std::vector<double> params(net.parameter_count());
  for (auto& p : params) p = io::read_f64(is);
  unflatten_params(net, params);
  return net;
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  save_network(os, net);
}

Network load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return load_network(is);
}

}  // namespace prl
