#include "misgan/imputer.hpp"

#include <stdexcept>

namespace misgan {
namespace {

std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t>& hidden, std::size_t out,
                                Activation out_act) {
  std::vector<LayerSpec> spec;
  for (std::size_t h : hidden) spec.push_back({h, Activation::kRelu, 0.0});
  spec.push_back({out, out_act, 0.0});
  return spec;
}

void check_triplet(const Tensor& x, const Tensor& m, const Tensor& omega) {
  if (!x.same_shape(m) || !x.same_shape(omega))
    throw std::invalid_argument("imputer: x, m, omega must share one shape, got " +
                                x.shape_str() + ", " + m.shape_str() + ", " +
                                omega.shape_str());
  for (double b : m.data)
    if (b != 0.0 && b != 1.0)
      throw std::invalid_argument("imputer: masks must be binary");
}

}  // namespace

ImputerModel make_imputer_model(const ImputerArchitecture& arch, double beta,
                                CounterRng& init_rng) {
  if (arch.data_dim == 0) throw std::invalid_argument("make_imputer_model: data_dim required");
  if (!(beta >= 0.0)) throw std::invalid_argument("make_imputer_model: beta must be >= 0");
  ImputerModel m;
  m.beta = beta;
  m.g_i_hat = Network(arch.data_dim, mlp_spec(arch.hidden, arch.data_dim, arch.output), init_rng);
  m.d_i = Network(arch.data_dim, mlp_spec(arch.critic_hidden, 1, Activation::kIdentity), init_rng);
  return m;
}

Tensor imputer_input_batch(const Tensor& x, const Tensor& m, const Tensor& omega) {
  check_triplet(x, m, omega);
  Tensor u = x;
  for (std::size_t i = 0; i < u.data.size(); ++i)
    if (m.data[i] == 0.0) u.data[i] = omega.data[i];
  return u;
}

NodePtr imputer_output(const Network& g_i_hat, const Tensor& x, const Tensor& m,
                       const Tensor& omega) {
  const Tensor u = imputer_input_batch(x, m, omega);
  const NodePtr fill = g_i_hat.forward(constant(u));
  return impute_merge(constant(x), fill, m);
}

Tensor impute_batch(const Network& g_i_hat, const Tensor& x, const Tensor& m,
                    const Tensor& omega) {
  return imputer_output(g_i_hat, x, m, omega)->value;
}

std::vector<double> impute(const Network& g_i_hat, const std::vector<double>& x, const Mask& m,
                           const std::vector<double>& omega) {
  if (x.size() != m.bits.size() || x.size() != omega.size())
    throw std::invalid_argument("impute: x, m, omega lengths differ");
  Tensor xb({1, x.size()}), mb({1, x.size()}), wb({1, x.size()});
  for (std::size_t i = 0; i < x.size(); ++i) {
    xb.data[i] = x[i];
    mb.data[i] = m.bits[i] ? 1.0 : 0.0;
    wb.data[i] = omega[i];
  }
  return impute_batch(g_i_hat, xb, mb, wb).data;
}

NodePtr loss_imputer(const Network& d_i, const Network& g_i_hat, const Network& g_x,
                     const Tensor& z, const Tensor& x, const Tensor& m, const Tensor& omega) {
  if (z.shape.size() != 2 || z.shape[0] == 0)
    throw std::invalid_argument("loss_imputer: non-empty z batch required");
  if (x.shape.size() != 2 || x.shape[0] == 0)
    throw std::invalid_argument("loss_imputer: non-empty (x, m, omega) batch required");
  const NodePtr generated = g_x.forward(constant(z));
  const NodePtr imputed = imputer_output(g_i_hat, x, m, omega);
  return sub(mean_all(d_i.forward(generated)), mean_all(d_i.forward(imputed)));
}

NodePtr loss_imputer_standalone(const Network& d_i, const Network& g_i_hat, const Network& g_x,
                                const Tensor& z_real, const Tensor& z_impute, const Tensor& m,
                                const Tensor& omega) {
  // G_x stays frozen here: both generator passes are value-level.
  const Tensor real = g_x.forward_eval(z_real);
  const Tensor to_complete = g_x.forward_eval(z_impute);
  const NodePtr imputed = imputer_output(g_i_hat, to_complete, m, omega);
  return sub(mean_all(d_i.forward(constant(real))), mean_all(d_i.forward(imputed)));
}

}  // namespace misgan
