#pragma once

#include <cstddef>
#include <vector>

#include "misgan/autodiff.hpp"
#include "misgan/rng.hpp"
#include "misgan/tensor.hpp"

namespace misgan {

enum class Activation { kIdentity, kRelu, kTemperatureSigmoid, kSigmoid };

struct LayerSpec {
  std::size_t width = 0;
  Activation activation = Activation::kIdentity;
  double lambda = 0.0;  // temperature, only for kTemperatureSigmoid
};

/// Dense multilayer perceptron. Weights are stored [in, out] so a batch
/// forward is X[B,in] * W + b. Weight entries are initialized uniformly in
/// [-a, a] with a = sqrt(6 / (fan_in + fan_out)); biases start at zero.
class Network {
 public:
  struct Layer {
    NodePtr weight;  // [in, out]
    NodePtr bias;    // [out]
    Activation activation;
    double lambda;
  };

  Network() = default;
  Network(std::size_t input_dim, const std::vector<LayerSpec>& specs, CounterRng& init_rng);

  // Value semantics: copying clones the parameter nodes, so two copies never
  // share trainable state. Moves transfer ownership.
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  NodePtr forward(const NodePtr& input) const;
  /// Forward pass without keeping a graph (for sampling / detached batches).
  Tensor forward_eval(const Tensor& input) const;

  std::vector<NodePtr> parameters() const;
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const;
  bool empty() const { return layers_.empty(); }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;
};

/// Clamp every parameter entry to [-c, c]. Idempotent; c must be positive.
void clip_parameters(Network& net, double c);

/// Sum of all parameter entries; cheap fingerprint for frozen-network checks.
double parameter_checksum(const Network& net);

/// Plain-data snapshot of a network (for checkpoints).
struct NetworkState {
  struct LayerState {
    Tensor weight;
    Tensor bias;
    Activation activation = Activation::kIdentity;
    double lambda = 0.0;
  };
  std::size_t input_dim = 0;
  std::vector<LayerState> layers;
};

NetworkState capture_network(const Network& net);
Network restore_network(const NetworkState& state);

}  // namespace misgan
