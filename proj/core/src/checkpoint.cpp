#include "misgan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace misgan {
namespace {

using nlohmann::json;

constexpr char kB64Table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void fail(const std::string& section, const std::string& detail) {
  throw std::runtime_error("checkpoint: bad section \"" + section + "\": " + detail);
}

json tensor_to_json(const Tensor& t) {
  json j;
  j["shape"] = t.shape;
  j["data"] = encode_base64(t.data);
  return j;
}

Tensor tensor_from_json(const json& j, const std::string& section) {
  Tensor t;
  try {
    t.shape = j.at("shape").get<std::vector<std::size_t>>();
    t.data = decode_base64(j.at("data").get<std::string>());
  } catch (const json::exception& e) {
    fail(section, e.what());
  }
  if (t.data.size() != shape_numel(t.shape)) fail(section, "tensor size mismatch");
  return t;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTemperatureSigmoid: return "temperature_sigmoid";
    case Activation::kSigmoid: return "sigmoid";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name, const std::string& section) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "temperature_sigmoid") return Activation::kTemperatureSigmoid;
  if (name == "sigmoid") return Activation::kSigmoid;
  fail(section, "unknown activation \"" + name + "\"");
}

}  // namespace

std::string encode_base64(const std::vector<double>& values) {
  const std::size_t nbytes = values.size() * sizeof(double);
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  std::string out;
  out.reserve((nbytes + 2) / 3 * 4);
  for (std::size_t i = 0; i < nbytes; i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < nbytes) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < nbytes) chunk |= bytes[i + 2];
    out.push_back(kB64Table[(chunk >> 18) & 63]);
    out.push_back(kB64Table[(chunk >> 12) & 63]);
    out.push_back(i + 1 < nbytes ? kB64Table[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < nbytes ? kB64Table[chunk & 63] : '=');
  }
  return out;
}

std::vector<double> decode_base64(const std::string& text) {
  if (text.size() % 4 != 0) throw std::runtime_error("base64: length must be a multiple of 4");
  static int lookup[256];
  static bool init = [] {
    for (int& v : lookup) v = -1;
    for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kB64Table[i])] = i;
    return true;
  }();
  (void)init;

  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t chunk = 0;
    int significant = 3;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + k];
      if (ch == '=') {
        if (i + 4 != text.size() || k < 2) throw std::runtime_error("base64: bad padding");
        --significant;
        chunk <<= 6;
        continue;
      }
      const int v = lookup[static_cast<unsigned char>(ch)];
      if (v < 0) throw std::runtime_error("base64: invalid character");
      chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
    }
    bytes.push_back(static_cast<unsigned char>((chunk >> 16) & 0xFF));
    if (significant > 1) bytes.push_back(static_cast<unsigned char>((chunk >> 8) & 0xFF));
    if (significant > 2) bytes.push_back(static_cast<unsigned char>(chunk & 0xFF));
  }
  if (bytes.size() % sizeof(double) != 0)
    throw std::runtime_error("base64: payload is not a double array");
  std::vector<double> values(bytes.size() / sizeof(double));
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

void save_checkpoint(const std::string& path, const TrainerState& state) {
  json root;
  root["format"] = "misgan-lab-checkpoint";
  root["version"] = kCheckpointVersion;
  root["kind"] = state.kind;
  root["seed"] = state.seed;
  root["step"] = state.step;
  root["hyper"] = {{"tau", state.tau},           {"lambda", state.lambda},
                   {"alpha", state.alpha},       {"beta", state.beta},
                   {"data_dim", state.data_dim}, {"noise_dim", state.noise_dim}};

  json networks = json::object();
  for (const auto& [name, net] : state.networks) {
    json layers = json::array();
    for (const NetworkState::LayerState& layer : net.layers) {
      json l;
      l["weight"] = tensor_to_json(layer.weight);
      l["bias"] = tensor_to_json(layer.bias);
      l["activation"] = activation_name(layer.activation);
      l["lambda"] = layer.lambda;
      layers.push_back(std::move(l));
    }
    networks[name] = {{"input_dim", net.input_dim}, {"layers", std::move(layers)}};
  }
  root["networks"] = std::move(networks);

  json optimizers = json::object();
  for (const auto& [name, accum] : state.optimizer_state) {
    json arrays = json::array();
    for (const std::vector<double>& a : accum) arrays.push_back(encode_base64(a));
    optimizers[name] = std::move(arrays);
  }
  root["optimizers"] = std::move(optimizers);
  root["streams"] = state.stream_positions;
  root["config"] = state.config_json;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << root.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

TrainerState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    fail("file", e.what());
  }
  TrainerState state;
  try {
    if (root.at("format").get<std::string>() != "misgan-lab-checkpoint")
      fail("format", "not a misgan-lab checkpoint");
    state.version = root.at("version").get<int>();
    if (state.version != kCheckpointVersion)
      throw std::runtime_error("checkpoint: unsupported version " +
                               std::to_string(state.version));
    state.kind = root.at("kind").get<std::string>();
    state.seed = root.at("seed").get<std::uint64_t>();
    state.step = root.at("step").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail("header", e.what());
  }
  try {
    const json& h = root.at("hyper");
    state.tau = h.at("tau").get<double>();
    state.lambda = h.at("lambda").get<double>();
    state.alpha = h.at("alpha").get<double>();
    state.beta = h.at("beta").get<double>();
    state.data_dim = h.at("data_dim").get<std::size_t>();
    state.noise_dim = h.at("noise_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    fail("hyper", e.what());
  }
  try {
    for (const auto& [name, net_json] : root.at("networks").items()) {
      NetworkState net;
      net.input_dim = net_json.at("input_dim").get<std::size_t>();
      for (const json& l : net_json.at("layers")) {
        NetworkState::LayerState layer;
        layer.weight = tensor_from_json(l.at("weight"), "networks." + name);
        layer.bias = tensor_from_json(l.at("bias"), "networks." + name);
        layer.activation =
            activation_from_name(l.at("activation").get<std::string>(), "networks." + name);
        layer.lambda = l.at("lambda").get<double>();
        net.layers.push_back(std::move(layer));
      }
      state.networks.emplace(name, std::move(net));
    }
  } catch (const json::exception& e) {
    fail("networks", e.what());
  }
  try {
    for (const auto& [name, arrays] : root.at("optimizers").items()) {
      std::vector<std::vector<double>> accum;
      for (const json& a : arrays) accum.push_back(decode_base64(a.get<std::string>()));
      state.optimizer_state.emplace(name, std::move(accum));
    }
  } catch (const json::exception& e) {
    fail("optimizers", e.what());
  }
  try {
    state.stream_positions =
        root.at("streams").get<std::map<std::string, std::uint64_t>>();
    state.config_json = root.at("config").get<std::string>();
  } catch (const json::exception& e) {
    fail("streams", e.what());
  }
  return state;
}

}  // namespace misgan
