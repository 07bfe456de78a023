#include "misgan/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace misgan {
namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  node->inputs = std::move(inputs);
  for (const NodePtr& in : node->inputs)
    if (in->requires_grad) node->requires_grad = true;
  if (node->requires_grad) node->backprop = std::move(backprop);
  return node;
}

enum class Broadcast { kSame, kLeftScalar, kRightScalar, kRightRow };

Broadcast classify(const char* op, const Tensor& a, const Tensor& b, bool allow_row) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (a.is_scalar()) return Broadcast::kLeftScalar;
  if (b.is_scalar()) return Broadcast::kRightScalar;
  if (allow_row && a.shape.size() == 2 && b.shape.size() == 1 && a.shape[1] == b.shape[0])
    return Broadcast::kRightRow;
  shape_error(op, a, b);
}

void accumulate(Node& target, const Tensor& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) target.grad.data[i] += grad.data[i];
}

// Gradient of a broadcast operand: reduce the full-shape gradient back onto
// the operand's shape.
Tensor reduce_to_scalar(const Tensor& g) {
  double s = 0.0;
  for (double v : g.data) s += v;
  return Tensor::scalar(s);
}

Tensor reduce_to_row(const Tensor& g, std::size_t cols) {
  Tensor out({cols});
  const std::size_t rows = g.data.size() / cols;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.data[c] += g.data[r * cols + c];
  return out;
}

NodePtr add_sub(const char* op, const NodePtr& a, const NodePtr& b, double sign) {
  const Broadcast bc = classify(op, a->value, b->value, /*allow_row=*/true);
  Tensor out = (bc == Broadcast::kLeftScalar) ? b->value : a->value;
  switch (bc) {
    case Broadcast::kSame:
      for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a->value.data[i] + sign * b->value.data[i];
      break;
    case Broadcast::kLeftScalar: {
      const double av = a->value.data[0];
      for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = av + sign * b->value.data[i];
      break;
    }
    case Broadcast::kRightScalar: {
      const double bv = sign * b->value.data[0];
      for (double& v : out.data) v += bv;
      break;
    }
    case Broadcast::kRightRow: {
      const std::size_t cols = b->value.data.size();
      for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += sign * b->value.data[i % cols];
      break;
    }
  }
  return make_node(op, std::move(out), {a, b}, [bc, sign](Node& n) {
    Node& na = *n.inputs[0];
    Node& nb = *n.inputs[1];
    if (na.requires_grad) {
      if (bc == Broadcast::kLeftScalar)
        accumulate(na, reduce_to_scalar(n.grad));
      else
        accumulate(na, n.grad);
    }
    if (nb.requires_grad) {
      Tensor g = n.grad;
      if (sign < 0)
        for (double& v : g.data) v = -v;
      if (bc == Broadcast::kRightScalar)
        accumulate(nb, reduce_to_scalar(g));
      else if (bc == Broadcast::kRightRow)
        accumulate(nb, reduce_to_row(g, nb.value.data.size()));
      else
        accumulate(nb, g);
    }
  });
}

}  // namespace

NodePtr constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "constant";
  node->value = std::move(value);
  return node;
}

NodePtr parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "parameter";
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[1] != bv.shape[0])
    shape_error("matmul", av, bv);
  const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.data[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv.data[p * n];
      double* orow = &out.data[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  return make_node("matmul", std::move(out), {a, b}, [m, k, n](Node& node) {
    Node& na = *node.inputs[0];
    Node& nb = *node.inputs[1];
    const Tensor& g = node.grad;
    if (na.requires_grad) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g.data[i * n + j];
          if (gij == 0.0) continue;
          const double* brow = &nb.value.data[0];
          for (std::size_t p = 0; p < k; ++p)
            na.grad.data[i * k + p] += gij * brow[p * n + j];
        }
    }
    if (nb.requires_grad) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = na.value.data[i * k + p];
          if (aip == 0.0) continue;
          const double* grow = &g.data[i * n];
          double* brow = &nb.grad.data[p * n];
          for (std::size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
        }
    }
  });
}

NodePtr add(const NodePtr& a, const NodePtr& b) { return add_sub("add", a, b, 1.0); }
NodePtr sub(const NodePtr& a, const NodePtr& b) { return add_sub("sub", a, b, -1.0); }

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  const Broadcast bc = classify("mul", a->value, b->value, /*allow_row=*/false);
  Tensor out = (bc == Broadcast::kLeftScalar) ? b->value : a->value;
  switch (bc) {
    case Broadcast::kSame:
      for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a->value.data[i] * b->value.data[i];
      break;
    case Broadcast::kLeftScalar: {
      const double av = a->value.data[0];
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = av * b->value.data[i];
      break;
    }
    case Broadcast::kRightScalar: {
      const double bv = b->value.data[0];
      for (double& v : out.data) v *= bv;
      break;
    }
    default:
      shape_error("mul", a->value, b->value);
  }
  return make_node("mul", std::move(out), {a, b}, [bc](Node& n) {
    Node& na = *n.inputs[0];
    Node& nb = *n.inputs[1];
    const Tensor& g = n.grad;
    if (na.requires_grad) {
      if (bc == Broadcast::kLeftScalar) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) s += g.data[i] * nb.value.data[i];
        na.grad.data[0] += s;
      } else if (bc == Broadcast::kRightScalar) {
        const double bv = nb.value.data[0];
        for (std::size_t i = 0; i < g.data.size(); ++i) na.grad.data[i] += g.data[i] * bv;
      } else {
        for (std::size_t i = 0; i < g.data.size(); ++i)
          na.grad.data[i] += g.data[i] * nb.value.data[i];
      }
    }
    if (nb.requires_grad) {
      if (bc == Broadcast::kRightScalar) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) s += g.data[i] * na.value.data[i];
        nb.grad.data[0] += s;
      } else if (bc == Broadcast::kLeftScalar) {
        const double av = na.value.data[0];
        for (std::size_t i = 0; i < g.data.size(); ++i) nb.grad.data[i] += g.data[i] * av;
      } else {
        for (std::size_t i = 0; i < g.data.size(); ++i)
          nb.grad.data[i] += g.data[i] * na.value.data[i];
      }
    }
  });
}

NodePtr relu(const NodePtr& x) {
  Tensor out = x->value;
  for (double& v : out.data)
    if (v < 0.0) v = 0.0;
  return make_node("relu", std::move(out), {x}, [](Node& n) {
    Node& nx = *n.inputs[0];
    if (!nx.requires_grad) return;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i)
      if (nx.value.data[i] > 0.0) nx.grad.data[i] += n.grad.data[i];
  });
}

namespace {

double stable_sigmoid(double x, double lambda) {
  const double t = x / lambda;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

NodePtr temperature_sigmoid(const NodePtr& x, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("temperature_sigmoid: lambda must be positive");
  Tensor out = x->value;
  for (double& v : out.data) v = stable_sigmoid(v, lambda);
  return make_node("temperature_sigmoid", std::move(out), {x}, [lambda](Node& n) {
    Node& nx = *n.inputs[0];
    if (!nx.requires_grad) return;
    // sigma'(x) = sigma(x) (1 - sigma(x)) / lambda
    for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
      const double s = n.value.data[i];
      nx.grad.data[i] += n.grad.data[i] * s * (1.0 - s) / lambda;
    }
  });
}

NodePtr sigmoid(const NodePtr& x) { return temperature_sigmoid(x, 1.0); }

NodePtr sum_all(const NodePtr& x) {
  double s = 0.0;
  for (double v : x->value.data) s += v;
  return make_node("sum", Tensor::scalar(s), {x}, [](Node& n) {
    Node& nx = *n.inputs[0];
    if (!nx.requires_grad) return;
    const double g = n.grad.data[0];
    for (double& v : nx.grad.data) v += g;
  });
}

NodePtr mean_all(const NodePtr& x) {
  if (x->value.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (double v : x->value.data) s += v;
  const double inv_n = 1.0 / static_cast<double>(x->value.numel());
  return make_node("mean", Tensor::scalar(s * inv_n), {x}, [inv_n](Node& n) {
    Node& nx = *n.inputs[0];
    if (!nx.requires_grad) return;
    const double g = n.grad.data[0] * inv_n;
    for (double& v : nx.grad.data) v += g;
  });
}

NodePtr scale(const NodePtr& x, double c) {
  Tensor out = x->value;
  for (double& v : out.data) v *= c;
  return make_node("scale", std::move(out), {x}, [c](Node& n) {
    Node& nx = *n.inputs[0];
    if (!nx.requires_grad) return;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i) nx.grad.data[i] += c * n.grad.data[i];
  });
}

NodePtr negate(const NodePtr& x) { return scale(x, -1.0); }

NodePtr mask_fill(const NodePtr& x, const NodePtr& m, double tau) {
  if (!x->value.same_shape(m->value)) shape_error("mask_fill", x->value, m->value);
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double mi = m->value.data[i];
    out.data[i] = x->value.data[i] * mi + tau * (1.0 - mi);
  }
  return make_node("mask_fill", std::move(out), {x, m}, [tau](Node& n) {
    Node& nx = *n.inputs[0];
    Node& nm = *n.inputs[1];
    if (nx.requires_grad)
      for (std::size_t i = 0; i < n.grad.data.size(); ++i)
        nx.grad.data[i] += n.grad.data[i] * nm.value.data[i];
    if (nm.requires_grad)
      for (std::size_t i = 0; i < n.grad.data.size(); ++i)
        nm.grad.data[i] += n.grad.data[i] * (nx.value.data[i] - tau);
  });
}

NodePtr impute_merge(const NodePtr& observed, const NodePtr& fill, const Tensor& mask) {
  if (!observed->value.same_shape(fill->value)) shape_error("impute_merge", observed->value, fill->value);
  if (!observed->value.same_shape(mask)) shape_error("impute_merge", observed->value, mask);
  Tensor out = observed->value;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double mi = mask.data[i];
    if (mi != 0.0 && mi != 1.0)
      throw std::invalid_argument("impute_merge: mask entries must be exactly 0 or 1");
    if (mi == 0.0) out.data[i] = fill->value.data[i];
  }
  Tensor mask_copy = mask;
  return make_node("impute_merge", std::move(out), {observed, fill},
                   [mask = std::move(mask_copy)](Node& n) {
                     Node& no = *n.inputs[0];
                     Node& nf = *n.inputs[1];
                     if (no.requires_grad)
                       for (std::size_t i = 0; i < n.grad.data.size(); ++i)
                         if (mask.data[i] == 1.0) no.grad.data[i] += n.grad.data[i];
                     if (nf.requires_grad)
                       for (std::size_t i = 0; i < n.grad.data.size(); ++i)
                         if (mask.data[i] == 0.0) nf.grad.data[i] += n.grad.data[i];
                   });
}

void backward(const NodePtr& root) {
  if (!root) throw std::invalid_argument("backward: null root");
  if (!root->value.is_scalar())
    throw std::invalid_argument("backward: root must be scalar, got " + root->value.shape_str());

  // Iterative postorder DFS; deterministic given the graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_input] = stack.back();
    if (next_input < node->inputs.size()) {
      Node* child = node->inputs[next_input++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order)
    if (node->requires_grad) node->grad = Tensor::zeros(node->value.shape);
  if (!root->requires_grad) return;
  root->grad.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->requires_grad && node->backprop) node->backprop(*node);
  }
}

}  // namespace misgan
