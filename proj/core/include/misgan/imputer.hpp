#pragma once

#include "misgan/misgan.hpp"

namespace misgan {

/// Imputer G_i(x, m, omega) = x (*) m + Ghat_i(x (*) m + omega (*) comp(m)) (*) comp(m)
/// together with its critic. The outer select keeps observed entries bitwise
/// intact; the inner select injects noise only on missing coordinates.
struct ImputerModel {
  Network g_i_hat;  // R^n -> R^n
  Network d_i;      // critic, R^n -> R
  double beta = 0.1;
};

struct ImputerArchitecture {
  std::size_t data_dim = 0;
  std::vector<std::size_t> hidden = {500, 500};
  std::vector<std::size_t> critic_hidden = {64, 64};
  Activation output = Activation::kIdentity;  // kSigmoid for [0,1]-valued data
};

ImputerModel make_imputer_model(const ImputerArchitecture& arch, double beta,
                                CounterRng& init_rng);

/// The noise-patched critic input x (*) m + omega (*) comp(m) (value level).
Tensor imputer_input_batch(const Tensor& x, const Tensor& m, const Tensor& omega);

/// Completed batch; observed coordinates are copied bitwise from x.
Tensor impute_batch(const Network& g_i_hat, const Tensor& x, const Tensor& m,
                    const Tensor& omega);

std::vector<double> impute(const Network& g_i_hat, const std::vector<double>& x, const Mask& m,
                           const std::vector<double>& omega);

/// Graph node of G_i(x, m, omega) for training (x, m, omega held constant,
/// gradient flows into Ghat_i on missing coordinates).
NodePtr imputer_output(const Network& g_i_hat, const Tensor& x, const Tensor& m,
                       const Tensor& omega);

/// L_i = E[D_i(G_x(z))] - E[D_i(G_i(x, m, omega))].
NodePtr loss_imputer(const Network& d_i, const Network& g_i_hat, const Network& g_x,
                     const Tensor& z, const Tensor& x, const Tensor& m, const Tensor& omega);

/// Stand-alone objective against a pre-trained generator:
/// E[D_i(G_x(z_real))] - E[D_i(G_i(G_x(z_impute), m, omega))].
NodePtr loss_imputer_standalone(const Network& d_i, const Network& g_i_hat, const Network& g_x,
                                const Tensor& z_real, const Tensor& z_impute, const Tensor& m,
                                const Tensor& omega);

}  // namespace misgan
