#include "misgan/network.hpp"

#include <cmath>
#include <stdexcept>

namespace misgan {

Network::Network(std::size_t input_dim, const std::vector<LayerSpec>& specs, CounterRng& init_rng)
    : input_dim_(input_dim) {
  if (input_dim == 0) throw std::invalid_argument("Network: input_dim must be positive");
  std::size_t fan_in = input_dim;
  for (const LayerSpec& spec : specs) {
    if (spec.width == 0) throw std::invalid_argument("Network: layer width must be positive");
    if (spec.activation == Activation::kTemperatureSigmoid &&
        !(spec.lambda > 0.0 && spec.lambda < 1.0))
      throw std::invalid_argument("Network: temperature sigmoid requires lambda in (0,1)");
    const std::size_t fan_out = spec.width;
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (double& v : w.data) v = init_rng.uniform(-a, a);
    layers_.push_back(Layer{parameter(std::move(w)), parameter(Tensor({fan_out})),
                            spec.activation, spec.lambda});
    fan_in = fan_out;
  }
}

Network::Network(const Network& other) : input_dim_(other.input_dim_) {
  layers_.reserve(other.layers_.size());
  for (const Layer& layer : other.layers_)
    layers_.push_back(Layer{parameter(layer.weight->value), parameter(layer.bias->value),
                            layer.activation, layer.lambda});
}

Network& Network::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

NodePtr Network::forward(const NodePtr& input) const {
  if (layers_.empty()) throw std::logic_error("Network::forward: empty network");
  NodePtr h = input;
  for (const Layer& layer : layers_) {
    h = add(matmul(h, layer.weight), layer.bias);
    switch (layer.activation) {
      case Activation::kIdentity:
        break;
      case Activation::kRelu:
        h = relu(h);
        break;
      case Activation::kTemperatureSigmoid:
        h = temperature_sigmoid(h, layer.lambda);
        break;
      case Activation::kSigmoid:
        h = sigmoid(h);
        break;
    }
  }
  return h;
}

Tensor Network::forward_eval(const Tensor& input) const {
  return forward(constant(input))->value;
}

std::vector<NodePtr> Network::parameters() const {
  std::vector<NodePtr> params;
  params.reserve(layers_.size() * 2);
  for (const Layer& layer : layers_) {
    params.push_back(layer.weight);
    params.push_back(layer.bias);
  }
  return params;
}

std::size_t Network::output_dim() const {
  if (layers_.empty()) throw std::logic_error("Network::output_dim: empty network");
  return layers_.back().weight->value.shape[1];
}

void clip_parameters(Network& net, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip_parameters: c must be positive");
  for (const NodePtr& p : net.parameters())
    for (double& v : p->value.data) {
      if (v > c) v = c;
      if (v < -c) v = -c;
    }
}

double parameter_checksum(const Network& net) {
  double s = 0.0;
  for (const NodePtr& p : net.parameters())
    for (double v : p->value.data) s += v;
  return s;
}

NetworkState capture_network(const Network& net) {
  NetworkState state;
  state.input_dim = net.input_dim();
  for (const Network::Layer& layer : net.layers())
    state.layers.push_back(
        {layer.weight->value, layer.bias->value, layer.activation, layer.lambda});
  return state;
}

Network restore_network(const NetworkState& state) {
  if (state.input_dim == 0 || state.layers.empty())
    throw std::invalid_argument("restore_network: empty network state");
  CounterRng unused(0, RngStream::kInit);
  std::vector<LayerSpec> specs;
  std::size_t fan_in = state.input_dim;
  for (const NetworkState::LayerState& ls : state.layers) {
    if (ls.weight.shape.size() != 2 || ls.weight.shape[0] != fan_in ||
        ls.bias.shape.size() != 1 || ls.bias.shape[0] != ls.weight.shape[1])
      throw std::invalid_argument("restore_network: inconsistent layer shapes");
    specs.push_back({ls.weight.shape[1], ls.activation, ls.lambda});
    fan_in = ls.weight.shape[1];
  }
  Network net(state.input_dim, specs, unused);
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    net.layers()[i].weight->value = state.layers[i].weight;
    net.layers()[i].bias->value = state.layers[i].bias;
  }
  return net;
}

}  // namespace misgan
