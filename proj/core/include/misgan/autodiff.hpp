#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "misgan/tensor.hpp"

namespace misgan {

class Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of a define-by-run computation graph. Values are computed
/// eagerly when an op is applied; gradients are filled in by backward().
///
/// The graph is rebuilt for every training step. A Node's value must be
/// treated as immutable once it has been used as an op input; parameter
/// leaves are mutated only between graph builds (by the optimizer).
class Node {
 public:
  Tensor value;
  Tensor grad;  // same shape as value; valid after the last backward() pass
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backprop;
};

NodePtr constant(Tensor value);
NodePtr parameter(Tensor value);

/// [M,K] x [K,N] -> [M,N].
NodePtr matmul(const NodePtr& a, const NodePtr& b);

/// Elementwise with broadcasting: equal shapes, scalar on either side, or
/// row vector [N] against matrix [B,N] (per-row bias).
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);

/// Elementwise product: equal shapes or scalar on either side.
NodePtr mul(const NodePtr& a, const NodePtr& b);

NodePtr relu(const NodePtr& x);

/// sigma_lambda(x) = 1 / (1 + exp(-x / lambda)). Requires lambda > 0.
NodePtr temperature_sigmoid(const NodePtr& x, double lambda);
NodePtr sigmoid(const NodePtr& x);

NodePtr sum_all(const NodePtr& x);
NodePtr mean_all(const NodePtr& x);

NodePtr scale(const NodePtr& x, double c);
NodePtr negate(const NodePtr& x);

/// Masking operator on graph values: x (*) m + tau * (1 - m).
/// Differentiable in both x and m; m may be a relaxed mask in [0,1].
NodePtr mask_fill(const NodePtr& x, const NodePtr& m, double tau);

/// Imputer head combine: out_d = observed_d where mask_d == 1, fill_d where
/// mask_d == 0. Selection keeps observed entries bitwise; the gradient flows
/// to `fill` on unobserved coordinates only. `mask` must be binary.
NodePtr impute_merge(const NodePtr& observed, const NodePtr& fill, const Tensor& mask);

/// Reverse-mode pass from a scalar root. Gradients of every node reachable
/// from the root are reset to zero first, so calling backward() a second
/// time recomputes gradients from scratch rather than accumulating onto the
/// previous pass.
void backward(const NodePtr& root);

}  // namespace misgan
