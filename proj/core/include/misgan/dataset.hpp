#pragma once

#include <array>
#include <string>
#include <vector>

#include "misgan/masking.hpp"
#include "misgan/rng.hpp"
#include "misgan/tensor.hpp"

namespace misgan {

/// A list of (x, m) pairs. Unobserved entries of x carry no information; the
/// file writer stores zeros there so ground truth never leaks into training.
struct IncompleteDataset {
  std::size_t n = 0;
  std::vector<std::vector<double>> values;
  std::vector<Mask> masks;

  std::size_t size() const { return values.size(); }
};

IncompleteDataset make_incomplete(const std::vector<std::vector<double>>& complete,
                                  const MaskMechanism& mechanism, CounterRng& mask_rng);

/// Gather a training minibatch as [B, n] tensors of values and mask bits.
void gather_batch(const IncompleteDataset& data, CounterRng& index_rng, std::size_t batch,
                  Tensor& x_out, Tensor& m_out);

// ---------------------------------------------------------------------------
// Built-in toy distributions

/// Eight point masses on the unit circle at multiples of 45 degrees. The
/// coordinates are exact (0, +-1, +-sqrt(1/2)), so masked outcomes can be
/// compared with exact equality.
const std::vector<std::array<double, 2>>& ring8_points();
std::vector<std::vector<double>> sample_ring8(std::size_t count, CounterRng& rng);

/// 6x6 binary images formed as the union of full rows and columns, each
/// included independently with probability bars6_line_prob(). The exact image
/// distribution is enumerable (2^12 row/column subsets).
constexpr std::size_t kBars6Side = 6;
double bars6_line_prob();
std::vector<std::vector<double>> sample_bars6(std::size_t count, CounterRng& rng);

struct FiniteSupport {
  std::vector<std::vector<double>> points;
  std::vector<double> probs;
};

/// Exact distribution of bars6 images (support and probabilities).
FiniteSupport bars6_distribution();

/// Exact distribution of f_tau(x, m) when x is uniform over `points` and m
/// follows the given mask distribution over {0,1}^n (lexicographic probs).
FiniteSupport masked_support(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& mask_probs, double tau);

/// Mask distribution of independent dropout in lexicographic order.
std::vector<double> dropout_mask_probs(std::size_t n, double rate);

// ---------------------------------------------------------------------------
// Dataset files.
//
// Binary, little-endian. Layout:
//   magic "MGLD" | u32 version (1) | u32 n | u64 count | u32 dtype (1 = f64)
//   count*n doubles (row-major values) | count*n bytes (mask bits, 0/1)
void write_dataset(const std::string& path, const IncompleteDataset& data);
IncompleteDataset read_dataset(const std::string& path);

}  // namespace misgan
