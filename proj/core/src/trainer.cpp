#include "misgan/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace misgan {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<Tensor> collect_grads(const Network& net) {
  std::vector<Tensor> grads;
  for (const NodePtr& p : net.parameters()) grads.push_back(p->grad);
  return grads;
}

}  // namespace

MisganTrainer::MisganTrainer(MisganModel model, IncompleteDataset dataset, TrainConfig cfg)
    : model_(std::move(model)),
      dataset_(std::move(dataset)),
      cfg_(cfg),
      data_rng_(cfg.seed, RngStream::kData),
      z_rng_(cfg.seed, RngStream::kNoiseZ),
      eps_rng_(cfg.seed, RngStream::kNoiseEps),
      omega_rng_(cfg.seed, RngStream::kNoiseOmega),
      eval_rng_(cfg.seed, RngStream::kEval),
      opt_gx_(cfg.learning_rate),
      opt_gm_(cfg.learning_rate),
      opt_dx_(cfg.learning_rate),
      opt_dm_(cfg.learning_rate),
      opt_gi_(cfg.learning_rate),
      opt_di_(cfg.learning_rate) {
  cfg_.validate();
  if (dataset_.size() == 0) throw std::invalid_argument("MisganTrainer: empty dataset");
  if (dataset_.n != model_.data_dim)
    throw std::invalid_argument("MisganTrainer: dataset dimension does not match the model");
  // Critics satisfy the clip constraint from step 0.
  clip_parameters(model_.d_x, cfg_.clip_c);
  clip_parameters(model_.d_m, cfg_.clip_c);
}

void MisganTrainer::attach_imputer(ImputerModel imputer) {
  if (imputer.g_i_hat.input_dim() != model_.data_dim)
    throw std::invalid_argument("attach_imputer: imputer dimension does not match the model");
  imputer_ = std::move(imputer);
  clip_parameters(imputer_->d_i, cfg_.clip_c);
}

ImputerModel& MisganTrainer::imputer() {
  if (!imputer_) throw std::logic_error("MisganTrainer: no imputer attached");
  return *imputer_;
}

double MisganTrainer::checked(const NodePtr& loss, const char* name) const {
  const double v = loss->value.data[0];
  if (!std::isfinite(v)) throw TrainingDiverged(step_, name);
  return v;
}

void MisganTrainer::critic_phase() {
  for (std::size_t c = 0; c < cfg_.n_critic; ++c) {
    Tensor x, m;
    gather_batch(dataset_, data_rng_, cfg_.batch_size, x, m);
    const Tensor z = sample_noise(z_rng_, cfg_.batch_size, model_.noise_dim);
    const Tensor eps = sample_noise(eps_rng_, cfg_.batch_size, model_.noise_dim);

    // Generator outputs are detached during critic updates.
    const Tensor fake_x = model_.g_x.forward_eval(z);
    const Tensor fake_m = model_.g_m.forward_eval(eps);
    const Tensor real_masked = mask_fill_batch(x, m, model_.tau);
    const Tensor fake_masked = mask_fill_batch(fake_x, fake_m, model_.tau);

    {
      const NodePtr lx =
          loss_data_on(model_.d_x, constant(real_masked), constant(fake_masked));
      checked(lx, "critic L_x");
      backward(negate(lx));  // ascend L_x
      opt_dx_.step(model_.d_x.parameters());
      clip_parameters(model_.d_x, cfg_.clip_c);
    }
    if (!cfg_.ambientgan_mode) {
      const NodePtr lm = loss_mask_on(model_.d_m, constant(m), constant(fake_m));
      checked(lm, "critic L_m");
      backward(negate(lm));  // ascend L_m
      opt_dm_.step(model_.d_m.parameters());
      clip_parameters(model_.d_m, cfg_.clip_c);
    }
    if (imputer_) {
      const Tensor omega = sample_noise(omega_rng_, cfg_.batch_size, model_.data_dim);
      const Tensor imputed = impute_batch(imputer_->g_i_hat, x, m, omega);
      const NodePtr li = sub(mean_all(imputer_->d_i.forward(constant(fake_x))),
                             mean_all(imputer_->d_i.forward(constant(imputed))));
      checked(li, "critic L_i");
      backward(negate(li));  // ascend L_i
      opt_di_.step(imputer_->d_i.parameters());
      clip_parameters(imputer_->d_i, cfg_.clip_c);
    }
  }
}

void MisganTrainer::generator_phase() {
  Tensor x, m;
  gather_batch(dataset_, data_rng_, cfg_.batch_size, x, m);
  const Tensor z = sample_noise(z_rng_, cfg_.batch_size, model_.noise_dim);
  const Tensor eps = sample_noise(eps_rng_, cfg_.batch_size, model_.noise_dim);

  // One shared graph; separate backward passes per generator objective.
  const NodePtr xhat = model_.g_x.forward(constant(z));
  const NodePtr mhat = model_.g_m.forward(constant(eps));
  const NodePtr real_masked = constant(mask_fill_batch(x, m, model_.tau));
  const NodePtr fake_masked = mask_fill(xhat, mhat, model_.tau);
  const NodePtr lx = loss_data_on(model_.d_x, real_masked, fake_masked);

  NodePtr lm;
  if (!cfg_.ambientgan_mode) lm = loss_mask_on(model_.d_m, constant(m), mhat);

  NodePtr li;
  if (imputer_) {
    const Tensor omega = sample_noise(omega_rng_, cfg_.batch_size, model_.data_dim);
    const NodePtr imputed = imputer_output(imputer_->g_i_hat, x, m, omega);
    li = sub(mean_all(imputer_->d_i.forward(xhat)),
             mean_all(imputer_->d_i.forward(imputed)));
  }

  const NodePtr j_gx = (imputer_ && imputer_->beta != 0.0) ? add(lx, scale(li, imputer_->beta))
                                                           : lx;
  const NodePtr j_gm = cfg_.ambientgan_mode ? scale(lx, model_.alpha)
                                            : add(lm, scale(lx, model_.alpha));

  backward(j_gx);
  const std::vector<Tensor> g_gx = collect_grads(model_.g_x);
  backward(j_gm);
  const std::vector<Tensor> g_gm = collect_grads(model_.g_m);
  std::vector<Tensor> g_gi;
  if (imputer_) {
    backward(li);
    g_gi = collect_grads(imputer_->g_i_hat);
  }

  opt_gx_.step(model_.g_x.parameters(), g_gx);
  opt_gm_.step(model_.g_m.parameters(), g_gm);
  if (imputer_) opt_gi_.step(imputer_->g_i_hat.parameters(), g_gi);

  ++step_;

  if (step_ % cfg_.log_interval == 0 || step_ == cfg_.total_steps) {
    MetricRow row;
    row.step = step_;
    row.loss_data = checked(lx, "L_x");
    row.loss_mask = cfg_.ambientgan_mode ? kNan : checked(lm, "L_m");
    row.loss_imputer = imputer_ ? checked(li, "L_i") : kNan;
    row.tv_mask = kNan;
    row.tv_data = kNan;
    if (evaluator && cfg_.eval_interval > 0 &&
        (step_ % cfg_.eval_interval == 0 || step_ == cfg_.total_steps)) {
      const auto [tv_mask, tv_data] = evaluator(*this);
      row.tv_mask = tv_mask;
      row.tv_data = tv_data;
    }
    log_.push_back(row);
  }
}

void MisganTrainer::step() {
  critic_phase();
  generator_phase();
}

void MisganTrainer::run() {
  while (step_ < cfg_.total_steps) step();
}

TrainerState MisganTrainer::snapshot() const {
  TrainerState s;
  s.kind = imputer_ ? "misgan_imputer" : "misgan";
  s.seed = cfg_.seed;
  s.step = step_;
  s.tau = model_.tau;
  s.lambda = model_.lambda;
  s.alpha = model_.alpha;
  s.beta = imputer_ ? imputer_->beta : 0.0;
  s.data_dim = model_.data_dim;
  s.noise_dim = model_.noise_dim;
  s.networks["g_x"] = capture_network(model_.g_x);
  s.networks["g_m"] = capture_network(model_.g_m);
  s.networks["d_x"] = capture_network(model_.d_x);
  s.networks["d_m"] = capture_network(model_.d_m);
  s.optimizer_state["g_x"] = opt_gx_.state();
  s.optimizer_state["g_m"] = opt_gm_.state();
  s.optimizer_state["d_x"] = opt_dx_.state();
  s.optimizer_state["d_m"] = opt_dm_.state();
  if (imputer_) {
    s.networks["g_i_hat"] = capture_network(imputer_->g_i_hat);
    s.networks["d_i"] = capture_network(imputer_->d_i);
    s.optimizer_state["g_i_hat"] = opt_gi_.state();
    s.optimizer_state["d_i"] = opt_di_.state();
  }
  s.stream_positions["data"] = data_rng_.position();
  s.stream_positions["z"] = z_rng_.position();
  s.stream_positions["eps"] = eps_rng_.position();
  s.stream_positions["omega"] = omega_rng_.position();
  s.stream_positions["eval"] = eval_rng_.position();
  return s;
}

void MisganTrainer::restore(const TrainerState& s) {
  if (s.kind != "misgan" && s.kind != "misgan_imputer")
    throw std::invalid_argument("MisganTrainer::restore: checkpoint kind is " + s.kind);
  model_.g_x = restore_network(s.networks.at("g_x"));
  model_.g_m = restore_network(s.networks.at("g_m"));
  model_.d_x = restore_network(s.networks.at("d_x"));
  model_.d_m = restore_network(s.networks.at("d_m"));
  model_.tau = s.tau;
  model_.lambda = s.lambda;
  model_.alpha = s.alpha;
  model_.data_dim = s.data_dim;
  model_.noise_dim = s.noise_dim;
  opt_gx_.state() = s.optimizer_state.at("g_x");
  opt_gm_.state() = s.optimizer_state.at("g_m");
  opt_dx_.state() = s.optimizer_state.at("d_x");
  opt_dm_.state() = s.optimizer_state.at("d_m");
  if (s.kind == "misgan_imputer") {
    ImputerModel imp;
    imp.g_i_hat = restore_network(s.networks.at("g_i_hat"));
    imp.d_i = restore_network(s.networks.at("d_i"));
    imp.beta = s.beta;
    imputer_ = std::move(imp);
    opt_gi_.state() = s.optimizer_state.at("g_i_hat");
    opt_di_.state() = s.optimizer_state.at("d_i");
  } else {
    imputer_.reset();
  }
  data_rng_.seek(s.stream_positions.at("data"));
  z_rng_.seek(s.stream_positions.at("z"));
  eps_rng_.seek(s.stream_positions.at("eps"));
  omega_rng_.seek(s.stream_positions.at("omega"));
  eval_rng_.seek(s.stream_positions.at("eval"));
  step_ = s.step;
}

// ---------------------------------------------------------------------------

StandaloneImputerTrainer::StandaloneImputerTrainer(ImputerModel imputer, Network frozen_g_x,
                                                   MaskMechanism mask_source, TrainConfig cfg)
    : imputer_(std::move(imputer)),
      g_x_(std::move(frozen_g_x)),
      mask_source_(mask_source),
      cfg_(cfg),
      z_rng_(cfg.seed, RngStream::kNoiseZ),
      mask_rng_(cfg.seed, RngStream::kMask),
      omega_rng_(cfg.seed, RngStream::kNoiseOmega),
      opt_gi_(cfg.learning_rate),
      opt_di_(cfg.learning_rate) {
  cfg_.validate();
  if (mask_source_.dim != g_x_.output_dim())
    throw std::invalid_argument(
        "StandaloneImputerTrainer: mask mechanism dimension does not match the generator");
  if (imputer_.g_i_hat.input_dim() != g_x_.output_dim())
    throw std::invalid_argument(
        "StandaloneImputerTrainer: imputer dimension does not match the generator");
  clip_parameters(imputer_.d_i, cfg_.clip_c);
}

Tensor StandaloneImputerTrainer::sample_mask_batch(std::size_t count) {
  Tensor t({count, mask_source_.dim});
  for (std::size_t b = 0; b < count; ++b) {
    const Mask m = sample_mask(mask_source_, mask_rng_);
    for (std::size_t i = 0; i < mask_source_.dim; ++i)
      t.data[b * mask_source_.dim + i] = m.bits[i] ? 1.0 : 0.0;
  }
  return t;
}

double StandaloneImputerTrainer::checked(const NodePtr& loss) const {
  const double v = loss->value.data[0];
  if (!std::isfinite(v)) throw TrainingDiverged(step_, "L_i");
  return v;
}

void StandaloneImputerTrainer::step() {
  const std::size_t b = cfg_.batch_size;
  const std::size_t n = g_x_.output_dim();
  for (std::size_t c = 0; c < cfg_.n_critic; ++c) {
    const Tensor z_real = sample_noise(z_rng_, b, g_x_.input_dim());
    const Tensor z_imp = sample_noise(z_rng_, b, g_x_.input_dim());
    const Tensor m = sample_mask_batch(b);
    const Tensor omega = sample_noise(omega_rng_, b, n);
    const Tensor real = g_x_.forward_eval(z_real);
    const Tensor completed = impute_batch(imputer_.g_i_hat, g_x_.forward_eval(z_imp), m, omega);
    const NodePtr li = sub(mean_all(imputer_.d_i.forward(constant(real))),
                           mean_all(imputer_.d_i.forward(constant(completed))));
    checked(li);
    backward(negate(li));
    opt_di_.step(imputer_.d_i.parameters());
    clip_parameters(imputer_.d_i, cfg_.clip_c);
  }

  const Tensor z_real = sample_noise(z_rng_, b, g_x_.input_dim());
  const Tensor z_imp = sample_noise(z_rng_, b, g_x_.input_dim());
  const Tensor m = sample_mask_batch(b);
  const Tensor omega = sample_noise(omega_rng_, b, n);
  const NodePtr li =
      loss_imputer_standalone(imputer_.d_i, imputer_.g_i_hat, g_x_, z_real, z_imp, m, omega);
  backward(li);
  opt_gi_.step(imputer_.g_i_hat.parameters());

  ++step_;
  if (step_ % cfg_.log_interval == 0 || step_ == cfg_.total_steps) {
    MetricRow row;
    row.step = step_;
    row.loss_mask = kNan;
    row.loss_data = kNan;
    row.loss_imputer = checked(li);
    row.tv_mask = kNan;
    row.tv_data = kNan;
    log_.push_back(row);
  }
}

void StandaloneImputerTrainer::run() {
  while (step_ < cfg_.total_steps) step();
}

TrainerState StandaloneImputerTrainer::snapshot() const {
  TrainerState s;
  s.kind = "imputer_standalone";
  s.seed = cfg_.seed;
  s.step = step_;
  s.beta = imputer_.beta;
  s.data_dim = g_x_.output_dim();
  s.noise_dim = g_x_.input_dim();
  s.networks["g_x"] = capture_network(g_x_);
  s.networks["g_i_hat"] = capture_network(imputer_.g_i_hat);
  s.networks["d_i"] = capture_network(imputer_.d_i);
  s.optimizer_state["g_i_hat"] = opt_gi_.state();
  s.optimizer_state["d_i"] = opt_di_.state();
  s.stream_positions["z"] = z_rng_.position();
  s.stream_positions["mask"] = mask_rng_.position();
  s.stream_positions["omega"] = omega_rng_.position();
  return s;
}

void StandaloneImputerTrainer::restore(const TrainerState& s) {
  if (s.kind != "imputer_standalone")
    throw std::invalid_argument("StandaloneImputerTrainer::restore: checkpoint kind is " +
                                s.kind);
  g_x_ = restore_network(s.networks.at("g_x"));
  imputer_.g_i_hat = restore_network(s.networks.at("g_i_hat"));
  imputer_.d_i = restore_network(s.networks.at("d_i"));
  imputer_.beta = s.beta;
  opt_gi_.state() = s.optimizer_state.at("g_i_hat");
  opt_di_.state() = s.optimizer_state.at("d_i");
  z_rng_.seek(s.stream_positions.at("z"));
  mask_rng_.seek(s.stream_positions.at("mask"));
  omega_rng_.seek(s.stream_positions.at("omega"));
  step_ = s.step;
}

}  // namespace misgan
