#pragma once

#include <cstdint>
#include <vector>

#include "misgan/dataset.hpp"
#include "misgan/network.hpp"

namespace misgan {

/// The four MisGAN networks plus the framework constants: fill value tau,
/// mask activation temperature lambda, and the coefficient alpha coupling the
/// data loss into the mask generator objective.
struct MisganModel {
  Network g_x;  // data generator, z -> R^n
  Network g_m;  // mask generator, eps -> (0,1)^n (temperature sigmoid head)
  Network d_x;  // data critic, R^n -> R
  Network d_m;  // mask critic, R^n -> R
  double tau = 0.0;
  double lambda = 0.66;
  double alpha = 0.2;
  std::size_t data_dim = 0;
  std::size_t noise_dim = 16;
};

struct MisganArchitecture {
  std::size_t data_dim = 0;
  std::size_t noise_dim = 16;
  std::vector<std::size_t> generator_hidden = {64, 64};
  std::vector<std::size_t> critic_hidden = {64, 64};
  Activation data_output = Activation::kIdentity;  // kSigmoid for [0,1]-valued data
};

MisganModel make_misgan_model(const MisganArchitecture& arch, double tau, double lambda,
                              double alpha, CounterRng& init_rng);

/// L_m = E[D_m(m)] - E[D_m(G_m(eps))].
NodePtr loss_mask(const Network& d_m, const Network& g_m, const Tensor& real_masks,
                  const Tensor& eps);

/// L_x = E[D_x(f_tau(x, m))] - E[D_x(f_tau(G_x(z), G_m(eps)))]. The generated
/// side keeps the relaxed mask soft; only reporting thresholds masks.
NodePtr loss_data(const Network& d_x, const Network& g_x, const Network& g_m,
                  const Tensor& real_x, const Tensor& real_masks, const Tensor& z,
                  const Tensor& eps, double tau);

/// Same losses on precomputed batches (the trainer uses these to feed the
/// critics detached generator outputs).
NodePtr loss_mask_on(const Network& d_m, const NodePtr& real_masks, const NodePtr& fake_masks);
NodePtr loss_data_on(const Network& d_x, const NodePtr& real_masked, const NodePtr& fake_masked);

Tensor sample_noise(CounterRng& rng, std::size_t count, std::size_t dim);
Tensor sample_data(const Network& g_x, CounterRng& rng, std::size_t count);
Tensor sample_masks(const Network& g_m, CounterRng& rng, std::size_t count);

/// Round relaxed masks at 0.5 (reporting only; training never rounds).
std::vector<Mask> threshold_masks(const Tensor& soft_masks);

std::vector<std::vector<double>> tensor_rows(const Tensor& batch);

/// f_tau applied row-wise to a batch (value-level, no graph).
Tensor mask_fill_batch(const Tensor& x, const Tensor& m, double tau);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t n_critic = 5;
  double learning_rate = 5e-5;
  double clip_c = 0.01;
  std::size_t total_steps = 1000;
  std::uint64_t seed = 0;
  bool ambientgan_mode = false;  // drop D_m and L_m; G_m trains on alpha*L_x alone
  double beta = 0.1;             // imputer coupling (joint training only)
  std::size_t log_interval = 1;
  std::size_t eval_interval = 0;  // 0 disables TV evaluation
  std::size_t eval_samples = 2048;

  void validate() const;
};

struct MetricRow {
  std::uint64_t step = 0;
  double loss_mask = 0.0;
  double loss_data = 0.0;
  double loss_imputer = 0.0;  // NaN when no imputer is attached
  double tv_mask = 0.0;       // NaN except on evaluation steps
  double tv_data = 0.0;
};

using MetricLog = std::vector<MetricRow>;

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::uint64_t step, const std::string& what_loss);
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace misgan
