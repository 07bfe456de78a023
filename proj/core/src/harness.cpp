#include "misgan/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "misgan/checkpoint.hpp"
#include "misgan/config.hpp"
#include "misgan/evaluation.hpp"
#include "misgan/identifiability.hpp"
#include "misgan/trainer.hpp"

namespace misgan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_input_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + ": no path given");
  if (!fs::exists(path)) throw std::runtime_error(what + " not found: " + path);
}

// Outputs are claimed up front: inputs were validated already, and nothing
// has been written yet, so a clash leaves no partial outputs behind.
void claim_outputs(const std::vector<std::string>& paths, bool force) {
  for (const std::string& p : paths)
    if (!force && fs::exists(p))
      throw std::runtime_error("output already exists (use --force to overwrite): " + p);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void emit_report(const json& report, const std::string& output_dir, const std::string& name,
                 std::ostream& console) {
  if (output_dir.empty()) {
    console << report.dump(2) << '\n';
  } else {
    write_text((fs::path(output_dir) / name).string(), report.dump(2) + "\n");
  }
}

std::string metrics_csv(const MetricLog& log) {
  std::ostringstream out;
  out << "step,loss_mask,loss_data,loss_imputer,tv_mask,tv_data\n";
  for (const MetricRow& row : log)
    out << row.step << ',' << format_double(row.loss_mask) << ','
        << format_double(row.loss_data) << ',' << format_double(row.loss_imputer) << ','
        << format_double(row.tv_mask) << ',' << format_double(row.tv_data) << '\n';
  return out.str();
}

std::vector<std::vector<double>> sample_toy(const DatasetSpec& spec, CounterRng& rng) {
  if (spec.toy == "ring8") return sample_ring8(spec.count, rng);
  if (spec.toy == "bars6") return sample_bars6(spec.count, rng);
  throw UsageError("unknown toy dataset \"" + spec.toy + "\"");
}

IncompleteDataset build_training_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset.file.empty()) {
    require_input_file(cfg.dataset.file, "dataset file");
    return read_dataset(cfg.dataset.file);
  }
  CounterRng data_rng(cfg.seed, RngStream::kData);
  CounterRng mask_rng(cfg.seed, RngStream::kMask);
  const auto complete = sample_toy(cfg.dataset, data_rng);
  if (!cfg.mechanism) throw UsageError("toy datasets need a mask mechanism");
  return make_incomplete(complete, *cfg.mechanism, mask_rng);
}

// ---------------------------------------------------------------------------
// identify

int run_identify(const ExperimentConfig& cfg, std::ostream& out) {
  const IdentifyProblem& problem = *cfg.identify;
  const Alphabet alphabet(problem.alphabet, problem.n);
  const MaskDistribution q = MaskDistribution::from_probs(problem.n, problem.q);

  std::vector<TransitionMatrix> transitions;
  for (double tau : problem.tau_list) transitions.push_back(build_transition(q, alphabet, tau));

  json report;
  report["state_count"] = alphabet.state_count();
  json nullspace = json::array();
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Eigen::MatrixXd basis = null_space(transitions[i].entries);
    nullspace.push_back(
        {{"tau", problem.tau_list[i]}, {"dim", static_cast<std::size_t>(basis.cols())}});
  }
  report["nullspace"] = std::move(nullspace);

  bool invariant = true;
  for (std::size_t i = 0; i + 1 < transitions.size(); ++i)
    if (!same_nullspace(transitions[i].entries, transitions[i + 1].entries, 1e-8))
      invariant = false;
  report["tau_invariance"] = invariant;

  if (problem.p_star) {
    const DiscreteDistribution p_star = DiscreteDistribution::from_probs(*problem.p_star);
    if (p_star.probs.size() != alphabet.state_count())
      throw UsageError("identify: p_star length must be |P|^n");
    Eigen::VectorXd p(static_cast<Eigen::Index>(p_star.probs.size()));
    for (std::size_t i = 0; i < p_star.probs.size(); ++i)
      p[static_cast<Eigen::Index>(i)] = p_star.probs[i];
    json uniqueness = json::array();
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      const Eigen::VectorXd y = transitions[i].entries * p;
      const UniquenessResult r = unique_nonneg_solution(transitions[i].entries, y);
      json entry = {{"tau", problem.tau_list[i]}, {"unique", r.unique}};
      if (!r.unique) {
        entry["witness_a"] = std::vector<double>(r.witness_a.data(),
                                                 r.witness_a.data() + r.witness_a.size());
        entry["witness_b"] = std::vector<double>(r.witness_b.data(),
                                                 r.witness_b.data() + r.witness_b.size());
      }
      uniqueness.push_back(std::move(entry));
    }
    report["uniqueness"] = std::move(uniqueness);
  }

  if (!cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
  emit_report(report, cfg.output_dir, "report.json", out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// make-data

int run_make_data(const ExperimentConfig& cfg, bool force) {
  std::vector<std::vector<double>> complete;
  if (!cfg.dataset.file.empty()) {
    require_input_file(cfg.dataset.file, "dataset file");
    complete = read_dataset(cfg.dataset.file).values;
  } else {
    CounterRng data_rng(cfg.seed, RngStream::kData);
    complete = sample_toy(cfg.dataset, data_rng);
  }
  const fs::path dir(cfg.output_dir);
  const std::string data_path = (dir / "data.mgd").string();
  const std::string truth_path = (dir / "truth.mgd").string();
  fs::create_directories(dir);
  claim_outputs({data_path, truth_path}, force);

  CounterRng mask_rng(cfg.seed, RngStream::kMask);
  const IncompleteDataset incomplete = make_incomplete(complete, *cfg.mechanism, mask_rng);

  IncompleteDataset truth;
  truth.n = incomplete.n;
  truth.values = std::move(complete);
  truth.masks.assign(truth.values.size(), Mask{std::vector<std::uint8_t>(truth.n, 1)});

  write_dataset(data_path, incomplete);
  write_dataset(truth_path, truth);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / impute-train

std::function<std::pair<double, double>(MisganTrainer&)> make_tv_evaluator(
    const ExperimentConfig& cfg) {
  // Mask TV against the dataset's empirical mask histogram (feasible for
  // small n); data TV against the exact masked support of the ring toy under
  // dropout. Anything else reports NaN.
  const bool ring_dropout = cfg.dataset.toy == "ring8" && cfg.mechanism &&
                            cfg.mechanism->kind == MechanismKind::kDropout;
  FiniteSupport support;
  if (ring_dropout) {
    std::vector<std::vector<double>> points;
    for (const auto& p : ring8_points()) points.push_back({p[0], p[1]});
    support = masked_support(points, dropout_mask_probs(2, cfg.mechanism->dropout_rate),
                             cfg.model.tau);
  }
  return [ring_dropout, support](MisganTrainer& trainer) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t count = trainer.config().eval_samples;
    const std::size_t n = trainer.model().data_dim;
    double tv_mask = nan, tv_data = nan;

    const Tensor soft = sample_masks(trainer.model().g_m, trainer.eval_rng(), count);
    const std::vector<Mask> generated_masks = threshold_masks(soft);
    if (n <= 16) {
      tv_mask = tv_distance(mask_histogram(generated_masks, n),
                            mask_histogram(trainer.dataset().masks, n));
    }
    if (ring_dropout) {
      const Tensor fake_x = sample_data(trainer.model().g_x, trainer.eval_rng(), count);
      std::vector<std::vector<double>> fake_masked(count), real_masked(count);
      for (std::size_t b = 0; b < count; ++b) {
        fake_masked[b] = apply_mask(
            {fake_x.data.begin() + static_cast<std::ptrdiff_t>(b * n),
             fake_x.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * n)},
            generated_masks[b], trainer.model().tau);
        const std::size_t idx = trainer.eval_rng().uniform_index(trainer.dataset().size());
        real_masked[b] = apply_mask(trainer.dataset().values[idx],
                                    trainer.dataset().masks[idx], trainer.model().tau);
      }
      tv_data = tv_distance(nearest_support_histogram(fake_masked, support.points),
                            nearest_support_histogram(real_masked, support.points));
    }
    return std::make_pair(tv_mask, tv_data);
  };
}

int run_train(const ExperimentConfig& cfg, bool force) {
  const fs::path dir(cfg.output_dir);
  const std::string csv_path = (dir / "metrics.csv").string();
  const std::string ckpt_path = (dir / "checkpoint.json").string();

  const bool standalone = !cfg.frozen_gx.empty();
  if (standalone) require_input_file(cfg.frozen_gx, "frozen_gx checkpoint");
  IncompleteDataset dataset;
  if (!standalone) dataset = build_training_dataset(cfg);

  fs::create_directories(dir);
  claim_outputs({csv_path, ckpt_path}, force);

  CounterRng init_rng(cfg.seed, RngStream::kInit);

  if (standalone) {
    // Imputer trained against a frozen pre-trained generator; masks come
    // from the configured mechanism, the original data is never read.
    const TrainerState gx_state = load_checkpoint(cfg.frozen_gx);
    if (!gx_state.networks.count("g_x"))
      throw std::runtime_error("frozen_gx checkpoint has no g_x network");
    Network g_x = restore_network(gx_state.networks.at("g_x"));
    if (!cfg.mechanism) throw UsageError("impute-train with frozen_gx needs a mechanism");

    ImputerArchitecture arch;
    arch.data_dim = g_x.output_dim();
    arch.hidden = cfg.model.imputer_hidden;
    arch.critic_hidden = cfg.model.critic_hidden;
    arch.output = cfg.model.imputer_output;
    ImputerModel imputer = make_imputer_model(arch, cfg.model.beta, init_rng);

    StandaloneImputerTrainer trainer(std::move(imputer), std::move(g_x), *cfg.mechanism,
                                     cfg.train);
    trainer.run();
    TrainerState state = trainer.snapshot();
    state.config_json = cfg.raw_json;
    write_text(csv_path, metrics_csv(trainer.log()));
    save_checkpoint(ckpt_path, state);
    return kExitOk;
  }

  MisganArchitecture arch;
  arch.data_dim = dataset.n;
  arch.noise_dim = cfg.model.noise_dim;
  arch.generator_hidden = cfg.model.generator_hidden;
  arch.critic_hidden = cfg.model.critic_hidden;
  arch.data_output = cfg.model.data_output;
  MisganModel model =
      make_misgan_model(arch, cfg.model.tau, cfg.model.lambda, cfg.model.alpha, init_rng);

  MisganTrainer trainer(std::move(model), std::move(dataset), cfg.train);
  if (cfg.task == "impute-train") {
    ImputerArchitecture iarch;
    iarch.data_dim = arch.data_dim;
    iarch.hidden = cfg.model.imputer_hidden;
    iarch.critic_hidden = cfg.model.critic_hidden;
    iarch.output = cfg.model.imputer_output;
    trainer.attach_imputer(make_imputer_model(iarch, cfg.model.beta, init_rng));
  }
  trainer.evaluator = make_tv_evaluator(cfg);
  trainer.run();

  TrainerState state = trainer.snapshot();
  state.config_json = cfg.raw_json;
  write_text(csv_path, metrics_csv(trainer.log()));
  save_checkpoint(ckpt_path, state);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// impute-run

int run_impute(const ExperimentConfig& cfg, bool force) {
  require_input_file(cfg.checkpoint, "checkpoint");
  require_input_file(cfg.input, "input dataset");
  const fs::path dir(cfg.output_dir);
  const std::string out_path = (dir / "completed.mgd").string();

  const TrainerState state = load_checkpoint(cfg.checkpoint);
  if (!state.networks.count("g_i_hat"))
    throw std::runtime_error("checkpoint has no imputer network (kind: " + state.kind + ")");
  const Network g_i_hat = restore_network(state.networks.at("g_i_hat"));
  const IncompleteDataset input = read_dataset(cfg.input);
  if (input.n != g_i_hat.input_dim())
    throw std::runtime_error("input dataset dimension does not match the imputer");

  fs::create_directories(dir);
  claim_outputs({out_path}, force);

  CounterRng omega_rng(cfg.seed, RngStream::kNoiseOmega);
  IncompleteDataset completed = input;
  for (std::size_t r = 0; r < completed.size(); ++r) {
    std::vector<double> omega(completed.n);
    for (double& w : omega) w = omega_rng.normal();
    completed.values[r] = impute(g_i_hat, completed.values[r], completed.masks[r], omega);
  }
  write_dataset(out_path, completed);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

std::pair<std::vector<std::vector<double>>, std::vector<Mask>> load_eval_source(
    const EvalSource& src, std::uint64_t seed) {
  if (!src.file.empty()) {
    require_input_file(src.file, "eval source");
    IncompleteDataset data = read_dataset(src.file);
    return {std::move(data.values), std::move(data.masks)};
  }
  require_input_file(src.checkpoint, "eval checkpoint");
  const TrainerState state = load_checkpoint(src.checkpoint);
  CounterRng rng(seed, RngStream::kEval);
  if (src.sample == "mask") {
    if (!state.networks.count("g_m"))
      throw std::runtime_error("eval: checkpoint has no mask generator");
    const Network g_m = restore_network(state.networks.at("g_m"));
    const Tensor soft = sample_masks(g_m, rng, src.count);
    return {tensor_rows(soft), threshold_masks(soft)};
  }
  if (!state.networks.count("g_x"))
    throw std::runtime_error("eval: checkpoint has no data generator");
  const Network g_x = restore_network(state.networks.at("g_x"));
  const Tensor samples = sample_data(g_x, rng, src.count);
  std::vector<Mask> all_ones(src.count,
                             Mask{std::vector<std::uint8_t>(g_x.output_dim(), 1)});
  return {tensor_rows(samples), std::move(all_ones)};
}

int run_eval(const ExperimentConfig& cfg, std::ostream& out) {
  const EvalSpec& spec = *cfg.eval;
  auto [values_a, masks_a] = load_eval_source(spec.a, cfg.seed);
  auto [values_b, masks_b] = load_eval_source(spec.b, cfg.seed + 1);

  MetricReport report;
  report.samples_a = values_a.size();
  report.samples_b = values_b.size();
  report.fid = frechet_distance(values_a, values_b, spec.feature_map);

  if (spec.rmse_ground_truth) {
    require_input_file(*spec.rmse_ground_truth, "rmse ground truth");
    const IncompleteDataset truth = read_dataset(*spec.rmse_ground_truth);
    report.rmse = rmse_imputation(values_a, truth.values, masks_a);
  }
  if (spec.tv) {
    if (spec.tv->bins == "mask") {
      const std::size_t n = values_a.empty() ? 0 : values_a.front().size();
      report.tv = tv_distance(mask_histogram(masks_a, n), mask_histogram(masks_b, n));
    } else {  // ring8_masked
      std::vector<std::vector<double>> points;
      for (const auto& p : ring8_points()) points.push_back({p[0], p[1]});
      const FiniteSupport support =
          masked_support(points, dropout_mask_probs(2, spec.tv->dropout_rate), 0.0);
      report.tv = tv_distance(nearest_support_histogram(values_a, support.points),
                              nearest_support_histogram(values_b, support.points));
    }
  }

  json j;
  j["fid"] = report.fid;
  if (report.rmse) j["rmse"] = *report.rmse;
  if (report.tv) j["tv"] = *report.tv;
  j["samples_a"] = report.samples_a;
  j["samples_b"] = report.samples_b;
  if (!cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
  emit_report(j, cfg.output_dir, "report.json", out);
  return kExitOk;
}

}  // namespace

int run_task(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment_config(options.config_path, options.task);
    if (options.seed_override) {
      cfg.seed = *options.seed_override;
      cfg.train.seed = cfg.seed;
    }
  } catch (const ConfigError& e) {
    err << "misgan-lab: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (options.task == "identify") return run_identify(cfg, out);
    if (options.task == "make-data") return run_make_data(cfg, options.force);
    if (options.task == "train" || options.task == "impute-train")
      return run_train(cfg, options.force);
    if (options.task == "impute-run") return run_impute(cfg, options.force);
    if (options.task == "eval") return run_eval(cfg, out);
    err << "misgan-lab: unknown task " << options.task << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "misgan-lab: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "misgan-lab: " << options.task << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace misgan
