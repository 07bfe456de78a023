#include "misgan/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace misgan {

void RmsProp::apply(const std::vector<NodePtr>& params, const Tensor* grads, std::size_t count) {
  if (accum_.empty()) {
    accum_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      accum_[i].assign(params[i]->value.numel(), 0.0);
  }
  if (accum_.size() != params.size())
    throw std::invalid_argument("RmsProp::step: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = grads ? grads[i] : params[i]->grad;
    if (i < count && g.numel() != params[i]->value.numel())
      throw std::invalid_argument("RmsProp::step: gradient shape mismatch");
    std::vector<double>& s = accum_[i];
    std::vector<double>& p = params[i]->value.data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g.data[j];
      s[j] = decay_ * s[j] + (1.0 - decay_) * gj * gj;
      p[j] -= learning_rate_ * gj / (std::sqrt(s[j]) + eps_);
    }
  }
}

void RmsProp::step(const std::vector<NodePtr>& params) {
  apply(params, nullptr, params.size());
}

void RmsProp::step(const std::vector<NodePtr>& params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.size())
    throw std::invalid_argument("RmsProp::step: grads/params size mismatch");
  apply(params, grads.data(), grads.size());
}

}  // namespace misgan
