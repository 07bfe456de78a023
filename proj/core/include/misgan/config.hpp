#pragma once

#include <optional>
#include <string>
#include <vector>

#include "misgan/evaluation.hpp"
#include "misgan/masking.hpp"
#include "misgan/misgan.hpp"

namespace misgan {

/// Raised for malformed configuration (unknown keys, bad types, bad values).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetSpec {
  std::string toy;   // "ring8" or "bars6"; empty when reading from a file
  std::size_t count = 0;
  std::string file;
};

struct ModelConfig {
  double alpha = 0.2;
  double lambda = 0.66;
  double tau = 0.0;
  double beta = 0.1;
  std::size_t noise_dim = 16;
  std::vector<std::size_t> generator_hidden = {64, 64};
  std::vector<std::size_t> critic_hidden = {64, 64};
  std::vector<std::size_t> imputer_hidden = {500, 500};
  Activation data_output = Activation::kIdentity;
  Activation imputer_output = Activation::kIdentity;
};

struct IdentifyProblem {
  std::vector<double> alphabet;
  std::size_t n = 0;
  std::vector<double> q;               // 2^n, lexicographic
  std::optional<std::vector<double>> p_star;
  std::vector<double> tau_list;        // values in the alphabet
};

struct EvalSource {
  std::string file;        // dataset file, or
  std::string checkpoint;  // checkpoint to sample from
  std::size_t count = 4096;
  std::string sample = "data";  // "data" or "mask"
};

struct TvSpec {
  std::string bins;  // "mask" or "ring8_masked"
  double dropout_rate = 0.5;
};

struct EvalSpec {
  EvalSource a, b;
  FeatureMap feature_map;
  std::optional<std::string> rmse_ground_truth;  // complete dataset file
  std::optional<TvSpec> tv;
};

struct ExperimentConfig {
  std::string task;
  std::uint64_t seed = 0;
  std::string output_dir;

  DatasetSpec dataset;
  std::optional<MaskMechanism> mechanism;
  ModelConfig model;
  TrainConfig train;
  std::string frozen_gx;  // impute-train: checkpoint path enabling standalone mode

  std::optional<IdentifyProblem> identify;
  std::optional<EvalSpec> eval;

  std::string checkpoint;  // impute-run input checkpoint
  std::string input;       // impute-run input dataset

  std::string raw_json;  // the config text as loaded (stored in checkpoints)
};

/// Parse and validate a config file for the given task. Unknown keys are
/// rejected at every nesting level.
ExperimentConfig load_experiment_config(const std::string& path, const std::string& task);
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& task);

}  // namespace misgan
