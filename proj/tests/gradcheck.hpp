#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "misgan/autodiff.hpp"

namespace misgan::testing {

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  double worst_abs = 0.0;
};

/// Central-difference oracle: rebuilds the scalar loss under entrywise
/// parameter perturbations and compares against the analytic gradients from
/// backward(). Near-zero pairs are compared absolutely (the difference
/// quotient itself carries ~1e-11 of round-off at step 1e-5).
inline GradCheckResult gradient_check(const std::vector<NodePtr>& params,
                                      const std::function<NodePtr()>& build_loss,
                                      double step = 1e-5, double rel_tol = 1e-4,
                                      double abs_tol = 1e-8) {
  GradCheckResult result;
  const NodePtr root = build_loss();
  backward(root);
  std::vector<Tensor> analytic;
  for (const NodePtr& p : params) analytic.push_back(p->grad);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t i = 0; i < params[pi]->value.data.size(); ++i) {
      double& entry = params[pi]->value.data[i];
      const double saved = entry;
      entry = saved + step;
      const double f_plus = build_loss()->value.data[0];
      entry = saved - step;
      const double f_minus = build_loss()->value.data[0];
      entry = saved;
      const double fd = (f_plus - f_minus) / (2.0 * step);
      const double an = analytic[pi].data[i];
      const double diff = std::abs(fd - an);
      const double scale = std::max(std::abs(fd), std::abs(an));
      if (scale > 1e-6) {
        result.worst_rel = std::max(result.worst_rel, diff / scale);
        if (diff / scale > rel_tol) result.ok = false;
      } else {
        result.worst_abs = std::max(result.worst_abs, diff);
        if (diff > abs_tol) result.ok = false;
      }
    }
  }
  return result;
}

}  // namespace misgan::testing
