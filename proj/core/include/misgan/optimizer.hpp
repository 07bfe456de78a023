#pragma once

#include <vector>

#include "misgan/autodiff.hpp"

namespace misgan {

/// RMSProp without momentum: s <- decay*s + (1-decay)*g^2,
/// p <- p - lr * g / (sqrt(s) + eps).
class RmsProp {
 public:
  explicit RmsProp(double learning_rate, double decay = 0.99, double eps = 1e-8)
      : learning_rate_(learning_rate), decay_(decay), eps_(eps) {}

  /// Apply one descent step using each parameter's current grad. Gradients
  /// may also be supplied explicitly (same order and shapes as params).
  void step(const std::vector<NodePtr>& params);
  void step(const std::vector<NodePtr>& params, const std::vector<Tensor>& grads);

  double learning_rate() const { return learning_rate_; }
  std::vector<std::vector<double>>& state() { return accum_; }
  const std::vector<std::vector<double>>& state() const { return accum_; }

 private:
  void apply(const std::vector<NodePtr>& params, const Tensor* grads, std::size_t count);

  double learning_rate_;
  double decay_;
  double eps_;
  std::vector<std::vector<double>> accum_;
};

}  // namespace misgan
