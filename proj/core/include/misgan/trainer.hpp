#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "misgan/imputer.hpp"
#include "misgan/optimizer.hpp"

namespace misgan {

/// Everything a checkpoint stores: parameters, optimizer accumulators, rng
/// stream positions and the step counter, so a restored trainer continues
/// exactly as the uninterrupted run would.
struct TrainerState {
  int version = 1;
  std::string kind;  // "misgan", "misgan_imputer" or "imputer_standalone"
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  double tau = 0.0;
  double lambda = 0.66;
  double alpha = 0.2;
  double beta = 0.0;
  std::size_t data_dim = 0;
  std::size_t noise_dim = 0;
  std::map<std::string, NetworkState> networks;
  std::map<std::string, std::vector<std::vector<double>>> optimizer_state;
  std::map<std::string, std::uint64_t> stream_positions;
  std::string config_json;  // opaque experiment-config snapshot (may be empty)
};

/// Alternating Wasserstein training: per outer step, n_critic critic updates
/// (each followed by weight clipping) and one generator update. The mask
/// generator objective couples in alpha * L_x; with an attached imputer the
/// data generator objective couples in beta * L_i. In ambientgan_mode the
/// mask critic is dropped and G_m trains on alpha * L_x alone.
class MisganTrainer {
 public:
  MisganTrainer(MisganModel model, IncompleteDataset dataset, TrainConfig cfg);

  void attach_imputer(ImputerModel imputer);
  bool has_imputer() const { return imputer_.has_value(); }

  void step();
  void run();  // steps until config().total_steps

  std::uint64_t step_index() const { return step_; }
  MisganModel& model() { return model_; }
  const MisganModel& model() const { return model_; }
  ImputerModel& imputer();
  const MetricLog& log() const { return log_; }
  const TrainConfig& config() const { return cfg_; }
  const IncompleteDataset& dataset() const { return dataset_; }
  CounterRng& eval_rng() { return eval_rng_; }

  /// Optional hook producing (tv_mask, tv_data) on evaluation steps.
  std::function<std::pair<double, double>(MisganTrainer&)> evaluator;

  TrainerState snapshot() const;
  void restore(const TrainerState& state);

 private:
  void critic_phase();
  void generator_phase();
  double checked(const NodePtr& loss, const char* name) const;

  MisganModel model_;
  std::optional<ImputerModel> imputer_;
  IncompleteDataset dataset_;
  TrainConfig cfg_;
  std::uint64_t step_ = 0;
  MetricLog log_;

  CounterRng data_rng_, z_rng_, eps_rng_, omega_rng_, eval_rng_;
  RmsProp opt_gx_, opt_gm_, opt_dx_, opt_dm_, opt_gi_, opt_di_;
};

/// Trains only the imputer pair (Ghat_i, D_i) against a frozen data
/// generator, drawing masks from an arbitrary mechanism; no incomplete
/// training data is touched.
class StandaloneImputerTrainer {
 public:
  StandaloneImputerTrainer(ImputerModel imputer, Network frozen_g_x, MaskMechanism mask_source,
                           TrainConfig cfg);

  void step();
  void run();

  std::uint64_t step_index() const { return step_; }
  ImputerModel& imputer() { return imputer_; }
  const Network& frozen_generator() const { return g_x_; }
  const MetricLog& log() const { return log_; }
  const TrainConfig& config() const { return cfg_; }

  TrainerState snapshot() const;
  void restore(const TrainerState& state);

 private:
  Tensor sample_mask_batch(std::size_t count);
  double checked(const NodePtr& loss) const;

  ImputerModel imputer_;
  Network g_x_;
  MaskMechanism mask_source_;
  TrainConfig cfg_;
  std::uint64_t step_ = 0;
  MetricLog log_;

  CounterRng z_rng_, mask_rng_, omega_rng_;
  RmsProp opt_gi_, opt_di_;
};

}  // namespace misgan
