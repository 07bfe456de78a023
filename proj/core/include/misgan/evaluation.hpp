#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "misgan/dataset.hpp"

namespace misgan {

/// Feature embedding used before fitting Gaussians for the Frechet distance.
/// At desk scale a fixed random linear projection stands in for a trained
/// feature extractor; the identity map is used for low-dimensional toys.
struct FeatureMap {
  enum class Kind { kIdentity, kFixedRandomLinear };
  Kind kind = Kind::kIdentity;
  std::uint64_t seed = 0;
  std::size_t out_dim = 8;

  static FeatureMap identity() { return FeatureMap{}; }
  static FeatureMap fixed_random_linear(std::uint64_t seed, std::size_t out_dim);

  std::vector<std::vector<double>> apply(const std::vector<std::vector<double>>& samples) const;
};

/// Squared Frechet distance between Gaussians fitted to the mapped samples:
/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The matrix square
/// root goes through the symmetrized product; negative eigenvalues from
/// round-off are clamped at zero, and 1e-6 I is added to each covariance.
double frechet_distance(const std::vector<std::vector<double>>& samples_a,
                        const std::vector<std::vector<double>>& samples_b,
                        const FeatureMap& fmap);

/// Root mean square error over missing coordinates only (mask bit 0).
double rmse_imputation(const std::vector<std::vector<double>>& imputed,
                       const std::vector<std::vector<double>>& ground_truth,
                       const std::vector<Mask>& masks);

/// Total variation distance between two normalized histograms on the same
/// support: half the L1 distance.
double tv_distance(const std::vector<double>& hist_a, const std::vector<double>& hist_b);

/// Empirical histogram over a finite support: each sample is assigned to the
/// nearest support point in Euclidean distance.
std::vector<double> nearest_support_histogram(const std::vector<std::vector<double>>& samples,
                                              const std::vector<std::vector<double>>& support);

/// Empirical mask histogram over {0,1}^n in lexicographic order (n <= 16).
std::vector<double> mask_histogram(const std::vector<Mask>& masks, std::size_t n);

// ---------------------------------------------------------------------------
// Imputation baselines. All preserve observed entries bitwise.

enum class BaselineKind { kZero, kMean, kMatrixFactorization };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kZero;
  std::size_t rank = 8;
  std::size_t iterations = 100;
  double regularization = 1e-3;
  std::uint64_t seed = 0;

  static BaselineSpec zero() { return BaselineSpec{}; }
  static BaselineSpec mean();
  static BaselineSpec matrix_factorization(std::size_t rank, std::size_t iterations);
};

IncompleteDataset baseline_impute(const IncompleteDataset& data, const BaselineSpec& spec);

struct MetricReport {
  double fid = 0.0;
  std::optional<double> rmse;
  std::optional<double> tv;
  std::size_t samples_a = 0;
  std::size_t samples_b = 0;
};

}  // namespace misgan
