#include "misgan/misgan.hpp"

#include <stdexcept>

namespace misgan {
namespace {

std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t>& hidden, std::size_t out,
                                Activation out_act, double lambda = 0.0) {
  std::vector<LayerSpec> spec;
  for (std::size_t h : hidden) spec.push_back({h, Activation::kRelu, 0.0});
  spec.push_back({out, out_act, lambda});
  return spec;
}

void check_batch(const Tensor& t, const char* what) {
  if (t.shape.size() != 2 || t.shape[0] == 0)
    throw std::invalid_argument(std::string(what) + ": non-empty [batch, dim] tensor required");
}

}  // namespace

MisganModel make_misgan_model(const MisganArchitecture& arch, double tau, double lambda,
                              double alpha, CounterRng& init_rng) {
  if (arch.data_dim == 0) throw std::invalid_argument("make_misgan_model: data_dim required");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("make_misgan_model: lambda must lie in (0,1)");
  MisganModel m;
  m.tau = tau;
  m.lambda = lambda;
  m.alpha = alpha;
  m.data_dim = arch.data_dim;
  m.noise_dim = arch.noise_dim;
  m.g_x = Network(arch.noise_dim, mlp_spec(arch.generator_hidden, arch.data_dim, arch.data_output),
                  init_rng);
  m.g_m = Network(arch.noise_dim,
                  mlp_spec(arch.generator_hidden, arch.data_dim,
                           Activation::kTemperatureSigmoid, lambda),
                  init_rng);
  m.d_x = Network(arch.data_dim, mlp_spec(arch.critic_hidden, 1, Activation::kIdentity), init_rng);
  m.d_m = Network(arch.data_dim, mlp_spec(arch.critic_hidden, 1, Activation::kIdentity), init_rng);
  return m;
}

NodePtr loss_mask_on(const Network& d_m, const NodePtr& real_masks, const NodePtr& fake_masks) {
  check_batch(real_masks->value, "loss_mask");
  check_batch(fake_masks->value, "loss_mask");
  return sub(mean_all(d_m.forward(real_masks)), mean_all(d_m.forward(fake_masks)));
}

NodePtr loss_data_on(const Network& d_x, const NodePtr& real_masked, const NodePtr& fake_masked) {
  check_batch(real_masked->value, "loss_data");
  check_batch(fake_masked->value, "loss_data");
  return sub(mean_all(d_x.forward(real_masked)), mean_all(d_x.forward(fake_masked)));
}

NodePtr loss_mask(const Network& d_m, const Network& g_m, const Tensor& real_masks,
                  const Tensor& eps) {
  check_batch(eps, "loss_mask");
  return loss_mask_on(d_m, constant(real_masks), g_m.forward(constant(eps)));
}

NodePtr loss_data(const Network& d_x, const Network& g_x, const Network& g_m,
                  const Tensor& real_x, const Tensor& real_masks, const Tensor& z,
                  const Tensor& eps, double tau) {
  check_batch(z, "loss_data");
  check_batch(eps, "loss_data");
  const NodePtr real_masked = mask_fill(constant(real_x), constant(real_masks), tau);
  const NodePtr fake_masked =
      mask_fill(g_x.forward(constant(z)), g_m.forward(constant(eps)), tau);
  return loss_data_on(d_x, real_masked, fake_masked);
}

Tensor sample_noise(CounterRng& rng, std::size_t count, std::size_t dim) {
  Tensor t({count, dim});
  for (double& v : t.data) v = rng.normal();
  return t;
}

Tensor sample_data(const Network& g_x, CounterRng& rng, std::size_t count) {
  if (count == 0) return Tensor({0, g_x.output_dim()});
  return g_x.forward_eval(sample_noise(rng, count, g_x.input_dim()));
}

Tensor sample_masks(const Network& g_m, CounterRng& rng, std::size_t count) {
  if (count == 0) return Tensor({0, g_m.output_dim()});
  return g_m.forward_eval(sample_noise(rng, count, g_m.input_dim()));
}

std::vector<Mask> threshold_masks(const Tensor& soft_masks) {
  if (soft_masks.shape.size() != 2)
    throw std::invalid_argument("threshold_masks: [batch, dim] tensor required");
  const std::size_t n = soft_masks.shape[1];
  std::vector<Mask> masks(soft_masks.shape[0]);
  for (std::size_t b = 0; b < masks.size(); ++b) {
    masks[b].bits.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      masks[b].bits[i] = soft_masks.data[b * n + i] >= 0.5 ? 1 : 0;
  }
  return masks;
}

std::vector<std::vector<double>> tensor_rows(const Tensor& batch) {
  if (batch.shape.size() != 2) throw std::invalid_argument("tensor_rows: rank-2 tensor required");
  const std::size_t n = batch.shape[1];
  std::vector<std::vector<double>> rows(batch.shape[0], std::vector<double>(n));
  for (std::size_t b = 0; b < rows.size(); ++b)
    for (std::size_t i = 0; i < n; ++i) rows[b][i] = batch.data[b * n + i];
  return rows;
}

Tensor mask_fill_batch(const Tensor& x, const Tensor& m, double tau) {
  if (!x.same_shape(m))
    throw std::invalid_argument("mask_fill_batch: value/mask shape mismatch");
  Tensor out = x;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double mi = m.data[i];
    out.data[i] = x.data[i] * mi + tau * (1.0 - mi);
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (n_critic == 0) throw std::invalid_argument("TrainConfig: n_critic must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: bad learning_rate");
  if (!(clip_c > 0.0)) throw std::invalid_argument("TrainConfig: clip_c must be positive");
  if (total_steps == 0) throw std::invalid_argument("TrainConfig: total_steps must be positive");
  if (log_interval == 0) throw std::invalid_argument("TrainConfig: log_interval must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("TrainConfig: beta must be non-negative");
}

TrainingDiverged::TrainingDiverged(std::uint64_t step, const std::string& what_loss)
    : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what_loss +
                         " is not finite"),
      step_(step) {}

}  // namespace misgan
