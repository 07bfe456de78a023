#include "misgan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace misgan {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key \"" + key + "\"");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for \"" + key + "\"");
  }
}

template <typename T>
T get_required(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing required key \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for \"" + key + "\"");
  }
}

Activation parse_activation(const std::string& name, const std::string& where) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError(where + ": activation must be \"identity\" or \"sigmoid\"");
}

DatasetSpec parse_dataset(const json& obj) {
  require_keys(obj, "dataset", {"toy", "count", "file"});
  DatasetSpec spec;
  spec.toy = get_or<std::string>(obj, "toy", "");
  spec.count = get_or<std::size_t>(obj, "count", 0);
  spec.file = get_or<std::string>(obj, "file", "");
  if (spec.toy.empty() == spec.file.empty())
    throw ConfigError("dataset: exactly one of \"toy\" and \"file\" is required");
  if (!spec.toy.empty()) {
    if (spec.toy != "ring8" && spec.toy != "bars6")
      throw ConfigError("dataset: unknown toy \"" + spec.toy + "\"");
    if (spec.count == 0) throw ConfigError("dataset: toy datasets need a positive \"count\"");
  }
  return spec;
}

MaskMechanism parse_mechanism(const json& obj) {
  require_keys(obj, "mechanism", {"kind", "k", "rate", "image_shape", "n"});
  const auto kind = get_required<std::string>(obj, "mechanism", "kind");
  ImageShape shape;
  if (obj.contains("image_shape")) {
    const json& s = obj.at("image_shape");
    if (!s.is_array() || s.size() != 2)
      throw ConfigError("mechanism: \"image_shape\" must be [height, width]");
    shape.height = s.at(0).get<std::size_t>();
    shape.width = s.at(1).get<std::size_t>();
  }
  try {
    if (kind == "square")
      return MaskMechanism::square(shape, get_required<std::size_t>(obj, "mechanism", "k"));
    if (kind == "dropout")
      return MaskMechanism::dropout(get_required<std::size_t>(obj, "mechanism", "n"),
                                    get_required<double>(obj, "mechanism", "rate"));
    if (kind == "var_rect") return MaskMechanism::variable_rect(shape);
    if (kind == "quadrant") return MaskMechanism::quadrant(shape);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mechanism: ") + e.what());
  }
  throw ConfigError("mechanism: unknown kind \"" + kind + "\"");
}

std::vector<std::size_t> parse_widths(const json& obj, const std::string& key,
                                      std::vector<std::size_t> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& arr = obj.at(key);
  if (!arr.is_array() || arr.empty())
    throw ConfigError("model: \"" + key + "\" must be a non-empty array of widths");
  std::vector<std::size_t> widths;
  for (const json& v : arr) widths.push_back(v.get<std::size_t>());
  return widths;
}

ModelConfig parse_model(const json& obj) {
  require_keys(obj, "model",
               {"alpha", "lambda", "tau", "beta", "noise_dim", "generator_hidden",
                "critic_hidden", "imputer_hidden", "data_output", "imputer_output"});
  ModelConfig m;
  m.alpha = get_or<double>(obj, "alpha", m.alpha);
  m.lambda = get_or<double>(obj, "lambda", m.lambda);
  m.tau = get_or<double>(obj, "tau", m.tau);
  m.beta = get_or<double>(obj, "beta", m.beta);
  m.noise_dim = get_or<std::size_t>(obj, "noise_dim", m.noise_dim);
  m.generator_hidden = parse_widths(obj, "generator_hidden", m.generator_hidden);
  m.critic_hidden = parse_widths(obj, "critic_hidden", m.critic_hidden);
  m.imputer_hidden = parse_widths(obj, "imputer_hidden", m.imputer_hidden);
  m.data_output =
      parse_activation(get_or<std::string>(obj, "data_output", "identity"), "model.data_output");
  m.imputer_output = parse_activation(get_or<std::string>(obj, "imputer_output", "identity"),
                                      "model.imputer_output");
  if (!(m.lambda > 0.0 && m.lambda < 1.0))
    throw ConfigError("model: lambda must lie in (0,1)");
  if (m.noise_dim == 0) throw ConfigError("model: noise_dim must be positive");
  if (m.beta < 0.0) throw ConfigError("model: beta must be non-negative");
  return m;
}

TrainConfig parse_train(const json& obj, std::uint64_t seed) {
  require_keys(obj, "train",
               {"batch_size", "n_critic", "learning_rate", "clip_c", "total_steps",
                "ambientgan_mode", "log_interval", "eval_interval", "eval_samples"});
  TrainConfig t;
  t.batch_size = get_or<std::size_t>(obj, "batch_size", t.batch_size);
  t.n_critic = get_or<std::size_t>(obj, "n_critic", t.n_critic);
  t.learning_rate = get_or<double>(obj, "learning_rate", t.learning_rate);
  t.clip_c = get_or<double>(obj, "clip_c", t.clip_c);
  t.total_steps = get_or<std::size_t>(obj, "total_steps", t.total_steps);
  t.ambientgan_mode = get_or<bool>(obj, "ambientgan_mode", false);
  t.log_interval = get_or<std::size_t>(obj, "log_interval", t.log_interval);
  t.eval_interval = get_or<std::size_t>(obj, "eval_interval", t.eval_interval);
  t.eval_samples = get_or<std::size_t>(obj, "eval_samples", t.eval_samples);
  t.seed = seed;
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  return t;
}

IdentifyProblem parse_identify(const json& root) {
  IdentifyProblem p;
  p.n = get_required<std::size_t>(root, "identify", "n");
  p.alphabet = get_required<std::vector<double>>(root, "identify", "alphabet");
  p.q = get_required<std::vector<double>>(root, "identify", "q");
  if (root.contains("p_star")) p.p_star = root.at("p_star").get<std::vector<double>>();
  p.tau_list = get_required<std::vector<double>>(root, "identify", "tau_list");
  if (p.tau_list.empty()) throw ConfigError("identify: tau_list must not be empty");
  return p;
}

EvalSource parse_eval_source(const json& obj, const std::string& where) {
  require_keys(obj, where, {"file", "checkpoint", "count", "sample"});
  EvalSource src;
  src.file = get_or<std::string>(obj, "file", "");
  src.checkpoint = get_or<std::string>(obj, "checkpoint", "");
  src.count = get_or<std::size_t>(obj, "count", src.count);
  src.sample = get_or<std::string>(obj, "sample", src.sample);
  if (src.file.empty() == src.checkpoint.empty())
    throw ConfigError(where + ": exactly one of \"file\" and \"checkpoint\" is required");
  if (src.sample != "data" && src.sample != "mask")
    throw ConfigError(where + ": \"sample\" must be \"data\" or \"mask\"");
  if (!src.checkpoint.empty() && src.count < 2)
    throw ConfigError(where + ": \"count\" must be at least 2");
  return src;
}

EvalSpec parse_eval(const json& root) {
  EvalSpec spec;
  spec.a = parse_eval_source(root.at("a"), "a");
  spec.b = parse_eval_source(root.at("b"), "b");
  if (root.contains("feature_map")) {
    const json& f = root.at("feature_map");
    require_keys(f, "feature_map", {"kind", "seed", "out_dim"});
    const auto kind = get_required<std::string>(f, "feature_map", "kind");
    if (kind == "identity") {
      spec.feature_map = FeatureMap::identity();
    } else if (kind == "fixed_random_linear") {
      spec.feature_map = FeatureMap::fixed_random_linear(get_or<std::uint64_t>(f, "seed", 0),
                                                         get_or<std::size_t>(f, "out_dim", 8));
    } else {
      throw ConfigError("feature_map: unknown kind \"" + kind + "\"");
    }
  }
  if (root.contains("rmse")) {
    const json& r = root.at("rmse");
    require_keys(r, "rmse", {"ground_truth"});
    spec.rmse_ground_truth = get_required<std::string>(r, "rmse", "ground_truth");
  }
  if (root.contains("tv")) {
    const json& t = root.at("tv");
    require_keys(t, "tv", {"bins", "dropout_rate"});
    TvSpec tv;
    tv.bins = get_required<std::string>(t, "tv", "bins");
    tv.dropout_rate = get_or<double>(t, "dropout_rate", tv.dropout_rate);
    if (tv.bins != "mask" && tv.bins != "ring8_masked")
      throw ConfigError("tv: \"bins\" must be \"mask\" or \"ring8_masked\"");
    spec.tv = tv;
  }
  return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& task) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.task = task;
  cfg.raw_json = json_text;

  static const std::set<std::string> kCommon = {"task", "seed", "output_dir"};
  std::set<std::string> allowed = kCommon;
  if (task == "identify") {
    allowed.insert({"alphabet", "n", "q", "p_star", "tau_list"});
  } else if (task == "train") {
    allowed.insert({"dataset", "mechanism", "model", "train"});
  } else if (task == "impute-train") {
    allowed.insert({"dataset", "mechanism", "model", "train", "frozen_gx"});
  } else if (task == "impute-run") {
    allowed.insert({"checkpoint", "input"});
  } else if (task == "eval") {
    allowed.insert({"a", "b", "feature_map", "rmse", "tv"});
  } else if (task == "make-data") {
    allowed.insert({"dataset", "mechanism"});
  } else {
    throw ConfigError("unknown task \"" + task + "\"");
  }
  require_keys(root, "config", allowed);

  if (root.contains("task")) {
    const auto declared = root.at("task").get<std::string>();
    if (declared != task)
      throw ConfigError("config declares task \"" + declared + "\" but \"" + task +
                        "\" was requested");
  }
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0);
  cfg.output_dir = get_or<std::string>(root, "output_dir", "");
  if (cfg.output_dir.empty() && task != "eval" && task != "identify")
    throw ConfigError("config: \"output_dir\" is required for task " + task);

  if (task == "identify") {
    cfg.identify = parse_identify(root);
    return cfg;
  }
  if (task == "eval") {
    cfg.eval = parse_eval(root);
    return cfg;
  }
  if (task == "impute-run") {
    cfg.checkpoint = get_required<std::string>(root, "config", "checkpoint");
    cfg.input = get_required<std::string>(root, "config", "input");
    return cfg;
  }

  // train / impute-train / make-data
  if (task == "impute-train") cfg.frozen_gx = get_or<std::string>(root, "frozen_gx", "");
  const bool standalone = !cfg.frozen_gx.empty();
  if (root.contains("dataset")) cfg.dataset = parse_dataset(root.at("dataset"));
  else if (!standalone)
    throw ConfigError("config: \"dataset\" is required");
  if (root.contains("mechanism")) cfg.mechanism = parse_mechanism(root.at("mechanism"));
  if (task == "make-data") {
    if (!cfg.mechanism) throw ConfigError("make-data: \"mechanism\" is required");
    return cfg;
  }
  cfg.model = root.contains("model") ? parse_model(root.at("model")) : ModelConfig{};
  cfg.train = root.contains("train") ? parse_train(root.at("train"), cfg.seed)
                                     : TrainConfig{.seed = cfg.seed};
  cfg.train.beta = cfg.model.beta;
  if (standalone && !cfg.mechanism)
    throw ConfigError("impute-train: \"mechanism\" is required with \"frozen_gx\"");
  if (!standalone && !cfg.dataset.toy.empty() && !cfg.mechanism)
    throw ConfigError("config: toy datasets need a \"mechanism\" to generate masks");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path, const std::string& task) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), task);
}

}  // namespace misgan
