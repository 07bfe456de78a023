#include "misgan/evaluation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "misgan/rng.hpp"

namespace misgan {
namespace {

constexpr double kCovarianceRidge = 1e-6;

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  const std::size_t n = samples.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].size() != n) throw std::invalid_argument("ragged sample set");
    for (std::size_t c = 0; c < n; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[r][c];
  }
  return m;
}

// Symmetric PSD square root with negative eigenvalues clamped at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    lambda[i] = lambda[i] > 0.0 ? std::sqrt(lambda[i]) : 0.0;
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

FeatureMap FeatureMap::fixed_random_linear(std::uint64_t seed, std::size_t out_dim) {
  FeatureMap f;
  f.kind = Kind::kFixedRandomLinear;
  f.seed = seed;
  f.out_dim = out_dim;
  return f;
}

std::vector<std::vector<double>> FeatureMap::apply(
    const std::vector<std::vector<double>>& samples) const {
  if (kind == Kind::kIdentity) return samples;
  if (samples.empty()) return samples;
  const std::size_t n = samples.front().size();
  if (out_dim > n)
    throw std::invalid_argument("FeatureMap: out_dim must not exceed the input dimension");
  // Fixed projection with N(0, 1/n) entries, fully determined by the seed.
  CounterRng rng(seed, RngStream::kFeatureMap);
  std::vector<double> proj(n * out_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& v : proj) v = rng.normal() * scale;

  std::vector<std::vector<double>> mapped(samples.size(), std::vector<double>(out_dim, 0.0));
  for (std::size_t r = 0; r < samples.size(); ++r)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = samples[r][i];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < out_dim; ++j) mapped[r][j] += x * proj[i * out_dim + j];
    }
  return mapped;
}

double frechet_distance(const std::vector<std::vector<double>>& samples_a,
                        const std::vector<std::vector<double>>& samples_b,
                        const FeatureMap& fmap) {
  if (samples_a.size() < 2 || samples_b.size() < 2)
    throw std::invalid_argument("frechet_distance: need at least 2 samples per side");
  const Eigen::MatrixXd a = to_matrix(fmap.apply(samples_a));
  const Eigen::MatrixXd b = to_matrix(fmap.apply(samples_b));
  if (a.cols() != b.cols())
    throw std::invalid_argument("frechet_distance: dimension mismatch between sample sets");

  const Eigen::VectorXd mu_a = a.colwise().mean();
  const Eigen::VectorXd mu_b = b.colwise().mean();
  const Eigen::MatrixXd ca = (a.rowwise() - mu_a.transpose()).transpose() *
                             (a.rowwise() - mu_a.transpose()) /
                             static_cast<double>(a.rows() - 1);
  const Eigen::MatrixXd cb = (b.rowwise() - mu_b.transpose()).transpose() *
                             (b.rowwise() - mu_b.transpose()) /
                             static_cast<double>(b.rows() - 1);
  const Eigen::MatrixXd ra =
      ca + kCovarianceRidge * Eigen::MatrixXd::Identity(ca.rows(), ca.cols());
  const Eigen::MatrixXd rb =
      cb + kCovarianceRidge * Eigen::MatrixXd::Identity(cb.rows(), cb.cols());

  const Eigen::MatrixXd sa_half = psd_sqrt(ra);
  Eigen::MatrixXd product = sa_half * rb * sa_half;
  product = 0.5 * (product + product.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(product);
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda > 0.0) trace_sqrt += std::sqrt(lambda);
  }

  const double d2 =
      (mu_a - mu_b).squaredNorm() + ra.trace() + rb.trace() - 2.0 * trace_sqrt;
  return d2 > 0.0 ? d2 : 0.0;
}

double rmse_imputation(const std::vector<std::vector<double>>& imputed,
                       const std::vector<std::vector<double>>& ground_truth,
                       const std::vector<Mask>& masks) {
  if (imputed.size() != ground_truth.size() || imputed.size() != masks.size())
    throw std::invalid_argument("rmse_imputation: datasets are not aligned");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < imputed.size(); ++r) {
    if (imputed[r].size() != ground_truth[r].size() ||
        imputed[r].size() != masks[r].bits.size())
      throw std::invalid_argument("rmse_imputation: row length mismatch");
    for (std::size_t i = 0; i < imputed[r].size(); ++i)
      if (!masks[r].bits[i]) {
        const double e = imputed[r][i] - ground_truth[r][i];
        sum += e * e;
        ++count;
      }
  }
  if (count == 0) throw std::invalid_argument("rmse_imputation: no missing coordinates");
  return std::sqrt(sum / static_cast<double>(count));
}

double tv_distance(const std::vector<double>& hist_a, const std::vector<double>& hist_b) {
  if (hist_a.size() != hist_b.size())
    throw std::invalid_argument("tv_distance: histogram supports differ");
  double sum_a = 0.0, sum_b = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < hist_a.size(); ++i) {
    if (hist_a[i] < 0.0 || hist_b[i] < 0.0)
      throw std::invalid_argument("tv_distance: negative histogram mass");
    sum_a += hist_a[i];
    sum_b += hist_b[i];
    l1 += std::abs(hist_a[i] - hist_b[i]);
  }
  if (std::abs(sum_a - 1.0) > 1e-9 || std::abs(sum_b - 1.0) > 1e-9)
    throw std::invalid_argument("tv_distance: histograms must be normalized");
  return 0.5 * l1;
}

std::vector<double> nearest_support_histogram(const std::vector<std::vector<double>>& samples,
                                              const std::vector<std::vector<double>>& support) {
  if (support.empty()) throw std::invalid_argument("nearest_support_histogram: empty support");
  if (samples.empty()) throw std::invalid_argument("nearest_support_histogram: empty samples");
  std::vector<double> hist(support.size(), 0.0);
  for (const std::vector<double>& x : samples) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support[k].size() != x.size())
        throw std::invalid_argument("nearest_support_histogram: dimension mismatch");
      double d = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - support[k][i];
        d += diff * diff;
      }
      if (best_d < 0.0 || d < best_d) {
        best_d = d;
        best = k;
      }
    }
    hist[best] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(samples.size());
  return hist;
}

std::vector<double> mask_histogram(const std::vector<Mask>& masks, std::size_t n) {
  if (n == 0 || n > 16) throw std::invalid_argument("mask_histogram: n out of range");
  if (masks.empty()) throw std::invalid_argument("mask_histogram: empty mask set");
  std::vector<double> hist(std::size_t{1} << n, 0.0);
  for (const Mask& m : masks) {
    if (m.bits.size() != n) throw std::invalid_argument("mask_histogram: mask length mismatch");
    std::size_t index = 0;
    for (std::uint8_t b : m.bits) index = (index << 1) | (b ? 1u : 0u);
    hist[index] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(masks.size());
  return hist;
}

BaselineSpec BaselineSpec::mean() {
  BaselineSpec s;
  s.kind = BaselineKind::kMean;
  return s;
}

BaselineSpec BaselineSpec::matrix_factorization(std::size_t rank, std::size_t iterations) {
  BaselineSpec s;
  s.kind = BaselineKind::kMatrixFactorization;
  s.rank = rank;
  s.iterations = iterations;
  return s;
}

namespace {

// Alternating least squares on the observed entries: X ~ U V^T with ridge
// regularization; missing entries are filled from the factorization.
void mf_impute(IncompleteDataset& data, const BaselineSpec& spec) {
  const std::size_t rows = data.size();
  const std::size_t cols = data.n;
  const std::size_t rank = spec.rank;
  if (rank == 0 || rank >= std::min(rows, cols))
    throw std::invalid_argument("matrix factorization: rank must be below min(dataset dims)");

  CounterRng rng(spec.seed, RngStream::kBaseline);
  Eigen::MatrixXd u(rows, rank), v(cols, rank);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.uniform(0.0, 1.0);

  const Eigen::MatrixXd ridge =
      spec.regularization * Eigen::MatrixXd::Identity(rank, rank);
  for (std::size_t iter = 0; iter < spec.iterations; ++iter) {
    for (std::size_t r = 0; r < rows; ++r) {
      Eigen::MatrixXd gram = ridge;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rank);
      for (std::size_t c = 0; c < cols; ++c)
        if (data.masks[r].bits[c]) {
          gram.noalias() += v.row(c).transpose() * v.row(c);
          rhs.noalias() += data.values[r][c] * v.row(c).transpose();
        }
      u.row(r) = gram.ldlt().solve(rhs).transpose();
    }
    for (std::size_t c = 0; c < cols; ++c) {
      Eigen::MatrixXd gram = ridge;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rank);
      for (std::size_t r = 0; r < rows; ++r)
        if (data.masks[r].bits[c]) {
          gram.noalias() += u.row(r).transpose() * u.row(r);
          rhs.noalias() += data.values[r][c] * u.row(r).transpose();
        }
      v.row(c) = gram.ldlt().solve(rhs).transpose();
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (!data.masks[r].bits[c]) data.values[r][c] = u.row(r).dot(v.row(c));
}

}  // namespace

IncompleteDataset baseline_impute(const IncompleteDataset& data, const BaselineSpec& spec) {
  if (data.size() == 0) throw std::invalid_argument("baseline_impute: empty dataset");
  IncompleteDataset out = data;
  switch (spec.kind) {
    case BaselineKind::kZero:
      for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t c = 0; c < out.n; ++c)
          if (!out.masks[r].bits[c]) out.values[r][c] = 0.0;
      break;
    case BaselineKind::kMean: {
      // Per-coordinate mean over observed entries; never-observed -> 0.
      std::vector<double> sum(out.n, 0.0);
      std::vector<std::size_t> count(out.n, 0);
      for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t c = 0; c < out.n; ++c)
          if (out.masks[r].bits[c]) {
            sum[c] += out.values[r][c];
            ++count[c];
          }
      std::vector<double> mean(out.n, 0.0);
      for (std::size_t c = 0; c < out.n; ++c)
        if (count[c] > 0) mean[c] = sum[c] / static_cast<double>(count[c]);
      for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t c = 0; c < out.n; ++c)
          if (!out.masks[r].bits[c]) out.values[r][c] = mean[c];
      break;
    }
    case BaselineKind::kMatrixFactorization:
      mf_impute(out, spec);
      break;
  }
  return out;
}

}  // namespace misgan
