#include "misgan/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace misgan {

IncompleteDataset make_incomplete(const std::vector<std::vector<double>>& complete,
                                  const MaskMechanism& mechanism, CounterRng& mask_rng) {
  IncompleteDataset out;
  if (complete.empty()) throw std::invalid_argument("make_incomplete: empty dataset");
  out.n = complete.front().size();
  if (mechanism.dim != out.n)
    throw std::invalid_argument("make_incomplete: mechanism dimension does not match data");
  out.values.reserve(complete.size());
  out.masks.reserve(complete.size());
  for (const std::vector<double>& x : complete) {
    if (x.size() != out.n) throw std::invalid_argument("make_incomplete: ragged dataset");
    Mask m = sample_mask(mechanism, mask_rng);
    std::vector<double> masked(out.n, 0.0);
    for (std::size_t i = 0; i < out.n; ++i)
      if (m.bits[i]) masked[i] = x[i];
    out.values.push_back(std::move(masked));
    out.masks.push_back(std::move(m));
  }
  return out;
}

void gather_batch(const IncompleteDataset& data, CounterRng& index_rng, std::size_t batch,
                  Tensor& x_out, Tensor& m_out) {
  if (data.size() == 0) throw std::invalid_argument("gather_batch: empty dataset");
  if (batch == 0) throw std::invalid_argument("gather_batch: empty batch");
  x_out = Tensor({batch, data.n});
  m_out = Tensor({batch, data.n});
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t idx = static_cast<std::size_t>(index_rng.uniform_index(data.size()));
    for (std::size_t i = 0; i < data.n; ++i) {
      x_out.data[b * data.n + i] = data.values[idx][i];
      m_out.data[b * data.n + i] = data.masks[idx].bits[i] ? 1.0 : 0.0;
    }
  }
}

const std::vector<std::array<double, 2>>& ring8_points() {
  static const double s = std::sqrt(0.5);
  static const std::vector<std::array<double, 2>> points = {
      {1.0, 0.0}, {s, s}, {0.0, 1.0}, {-s, s}, {-1.0, 0.0}, {-s, -s}, {0.0, -1.0}, {s, -s}};
  return points;
}

std::vector<std::vector<double>> sample_ring8(std::size_t count, CounterRng& rng) {
  const auto& points = ring8_points();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = points[rng.uniform_index(points.size())];
    out.push_back({p[0], p[1]});
  }
  return out;
}

double bars6_line_prob() { return 0.2; }

namespace {

std::vector<double> bars_image(std::size_t row_bits, std::size_t col_bits) {
  std::vector<double> img(kBars6Side * kBars6Side, 0.0);
  for (std::size_t r = 0; r < kBars6Side; ++r)
    for (std::size_t c = 0; c < kBars6Side; ++c)
      if (((row_bits >> r) & 1u) || ((col_bits >> c) & 1u)) img[r * kBars6Side + c] = 1.0;
  return img;
}

}  // namespace

std::vector<std::vector<double>> sample_bars6(std::size_t count, CounterRng& rng) {
  const double p = bars6_line_prob();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t rows = 0, cols = 0;
    for (std::size_t r = 0; r < kBars6Side; ++r)
      if (rng.uniform() < p) rows |= (std::size_t{1} << r);
    for (std::size_t c = 0; c < kBars6Side; ++c)
      if (rng.uniform() < p) cols |= (std::size_t{1} << c);
    out.push_back(bars_image(rows, cols));
  }
  return out;
}

FiniteSupport bars6_distribution() {
  const double p = bars6_line_prob();
  std::map<std::uint64_t, double> prob_by_key;
  std::map<std::uint64_t, std::vector<double>> image_by_key;
  for (std::size_t rows = 0; rows < (1u << kBars6Side); ++rows)
    for (std::size_t cols = 0; cols < (1u << kBars6Side); ++cols) {
      const std::vector<double> img = bars_image(rows, cols);
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < img.size(); ++i)
        if (img[i] != 0.0) key |= (std::uint64_t{1} << i);
      const int ones = __builtin_popcountll(rows) + __builtin_popcountll(cols);
      const double prob = std::pow(p, ones) * std::pow(1.0 - p, 2.0 * kBars6Side - ones);
      prob_by_key[key] += prob;
      image_by_key.emplace(key, img);
    }
  FiniteSupport support;
  for (const auto& [key, prob] : prob_by_key) {
    support.points.push_back(image_by_key.at(key));
    support.probs.push_back(prob);
  }
  return support;
}

FiniteSupport masked_support(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& mask_probs, double tau) {
  if (points.empty()) throw std::invalid_argument("masked_support: no points");
  const std::size_t n = points.front().size();
  if (mask_probs.size() != (std::size_t{1} << n))
    throw std::invalid_argument("masked_support: expected 2^n mask probabilities");
  const double point_prob = 1.0 / static_cast<double>(points.size());

  std::map<std::vector<double>, double> acc;
  for (const std::vector<double>& x : points) {
    for (std::size_t mi = 0; mi < mask_probs.size(); ++mi) {
      if (mask_probs[mi] == 0.0) continue;
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        const bool observed = ((mi >> (n - 1 - i)) & 1u) != 0;
        y[i] = observed ? x[i] : tau;
      }
      acc[y] += point_prob * mask_probs[mi];
    }
  }
  FiniteSupport support;
  for (const auto& [point, prob] : acc) {
    support.points.push_back(point);
    support.probs.push_back(prob);
  }
  return support;
}

std::vector<double> dropout_mask_probs(std::size_t n, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("dropout_mask_probs: rate must lie in [0,1]");
  std::vector<double> probs(std::size_t{1} << n);
  for (std::size_t mi = 0; mi < probs.size(); ++mi) {
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      p *= ((mi >> i) & 1u) ? (1.0 - rate) : rate;
    probs[mi] = p;
  }
  return probs;
}

namespace {

constexpr char kMagic[4] = {'M', 'G', 'L', 'D'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kDtypeF64 = 1;

template <typename T>
void write_le(std::ofstream& out, T value) {
  // Host is little-endian on every platform this project targets.
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void write_dataset(const std::string& path, const IncompleteDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.n));
  write_le<std::uint64_t>(out, data.size());
  write_le<std::uint32_t>(out, kDtypeF64);
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.values[r].size() != data.n)
      throw std::invalid_argument("write_dataset: ragged dataset");
    out.write(reinterpret_cast<const char*>(data.values[r].data()),
              static_cast<std::streamsize>(data.n * sizeof(double)));
  }
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.masks[r].bits.size() != data.n)
      throw std::invalid_argument("write_dataset: mask length mismatch");
    out.write(reinterpret_cast<const char*>(data.masks[r].bits.data()),
              static_cast<std::streamsize>(data.n));
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

IncompleteDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_dataset: " + path + " is not a dataset file");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kFormatVersion)
    throw std::runtime_error("read_dataset: unsupported format version " +
                             std::to_string(version));
  const auto n = read_le<std::uint32_t>(in);
  const auto count = read_le<std::uint64_t>(in);
  const auto dtype = read_le<std::uint32_t>(in);
  if (dtype != kDtypeF64) throw std::runtime_error("read_dataset: unsupported dtype");

  IncompleteDataset data;
  data.n = n;
  data.values.assign(count, std::vector<double>(n));
  data.masks.assign(count, Mask{});
  for (std::size_t r = 0; r < count; ++r)
    in.read(reinterpret_cast<char*>(data.values[r].data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  for (std::size_t r = 0; r < count; ++r) {
    data.masks[r].bits.resize(n);
    in.read(reinterpret_cast<char*>(data.masks[r].bits.data()), static_cast<std::streamsize>(n));
  }
  if (!in) throw std::runtime_error("read_dataset: truncated file " + path);
  for (const Mask& m : data.masks)
    for (std::uint8_t b : m.bits)
      if (b != 0 && b != 1) throw std::runtime_error("read_dataset: corrupt mask section");
  return data;
}

}  // namespace misgan
