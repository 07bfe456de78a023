#include "misgan/identifiability.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "misgan/simplex.hpp"

namespace misgan {
namespace {

constexpr double kSumTol = 1e-12;

void check_distribution(const std::vector<double>& probs, const char* what) {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " +
                                std::to_string(sum));
}

}  // namespace

Alphabet::Alphabet(std::vector<double> v, std::size_t dim) : values(std::move(v)), n(dim) {
  if (values.empty()) throw std::invalid_argument("Alphabet: empty value set");
  if (n == 0) throw std::invalid_argument("Alphabet: n must be positive");
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] == values[j]) throw std::invalid_argument("Alphabet: values must be distinct");
  state_count();  // enforce the cap on construction
}

std::size_t Alphabet::state_count() const {
  std::size_t count = 1;
  for (std::size_t i = 0; i < n; ++i) {
    count *= values.size();
    if (count > kStateSpaceCap)
      throw std::invalid_argument("Alphabet: |P|^n exceeds the state-space cap");
  }
  return count;
}

std::size_t Alphabet::value_index(double value) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == value) return i;
  throw std::invalid_argument("Alphabet: value " + std::to_string(value) + " is not in P");
}

std::vector<std::size_t> Alphabet::state_digits(std::size_t state) const {
  std::vector<std::size_t> digits(n);
  const std::size_t base = values.size();
  for (std::size_t i = n; i-- > 0;) {
    digits[i] = state % base;
    state /= base;
  }
  return digits;
}

std::size_t Alphabet::state_index(const std::vector<std::size_t>& digits) const {
  const std::size_t base = values.size();
  std::size_t index = 0;
  for (std::size_t d : digits) index = index * base + d;
  return index;
}

MaskDistribution MaskDistribution::from_probs(std::size_t n, std::vector<double> probs) {
  if (n == 0 || n > kMaskEnumLimit) throw std::invalid_argument("MaskDistribution: bad n");
  if (probs.size() != (std::size_t{1} << n))
    throw std::invalid_argument("MaskDistribution: expected 2^n probabilities");
  check_distribution(probs, "MaskDistribution");
  MaskDistribution q;
  q.n = n;
  q.probs = std::move(probs);
  return q;
}

std::vector<std::size_t> MaskDistribution::support() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) s.push_back(i);
  return s;
}

DiscreteDistribution DiscreteDistribution::from_probs(std::vector<double> probs) {
  check_distribution(probs, "DiscreteDistribution");
  DiscreteDistribution d;
  d.probs = std::move(probs);
  return d;
}

std::size_t mask_lex_index(const Mask& m) {
  std::size_t index = 0;
  for (std::uint8_t b : m.bits) index = (index << 1) | (b ? 1u : 0u);
  return index;
}

Mask mask_from_lex_index(std::size_t index, std::size_t n) {
  Mask m;
  m.bits.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    m.bits[j] = static_cast<std::uint8_t>((index >> (n - 1 - j)) & 1u);
  return m;
}

std::vector<Mask> enumerate_masks(std::size_t n, std::size_t limit) {
  if (n == 0 || n > limit)
    throw std::invalid_argument("enumerate_masks: n exceeds the enumeration limit");
  const std::size_t count = std::size_t{1} << n;
  std::vector<Mask> masks;
  masks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) masks.push_back(mask_from_lex_index(i, n));
  return masks;
}

namespace {

// f_tau on state indices: observed digits kept, unobserved digits replaced by
// the digit of tau.
std::size_t masked_state_index(const std::vector<std::size_t>& digits, const Mask& m,
                               std::size_t tau_digit, std::size_t base) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < digits.size(); ++i)
    index = index * base + (m.bits[i] ? digits[i] : tau_digit);
  return index;
}

// Canonical representative of [v]_m: unobserved digits set to 0.
std::size_t class_representative(const std::vector<std::size_t>& digits, const Mask& m,
                                 std::size_t base) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < digits.size(); ++i)
    index = index * base + (m.bits[i] ? digits[i] : 0);
  return index;
}

void check_q_matches(const MaskDistribution& q, const Alphabet& alphabet) {
  if (q.n != alphabet.n)
    throw std::invalid_argument("mask distribution dimensionality does not match alphabet");
}

}  // namespace

TransitionMatrix build_transition(const MaskDistribution& q, const Alphabet& alphabet,
                                  double tau) {
  check_q_matches(q, alphabet);
  const std::size_t tau_digit = alphabet.value_index(tau);
  const std::size_t states = alphabet.state_count();
  const std::size_t base = alphabet.size();
  const std::vector<Mask> masks = enumerate_masks(alphabet.n);

  TransitionMatrix t;
  t.tau = tau;
  t.tau_index = tau_digit;
  t.entries.setZero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  for (std::size_t s = 0; s < states; ++s) {
    const std::vector<std::size_t> digits = alphabet.state_digits(s);
    for (std::size_t mi = 0; mi < masks.size(); ++mi) {
      const double qm = q.probs[mi];
      if (qm == 0.0) continue;
      const std::size_t out = masked_state_index(digits, masks[mi], tau_digit, base);
      t.entries(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(s)) += qm;
    }
  }
  return t;
}

std::map<std::size_t, double> marginals(const Eigen::VectorXd& x, const Mask& m,
                                        const Alphabet& alphabet) {
  if (m.bits.size() != alphabet.n)
    throw std::invalid_argument("marginals: mask length does not match alphabet");
  if (x.size() != static_cast<Eigen::Index>(alphabet.state_count()))
    throw std::invalid_argument("marginals: vector length does not match state space");
  const std::size_t base = alphabet.size();
  std::map<std::size_t, double> mass;
  for (std::size_t s = 0; s < static_cast<std::size_t>(x.size()); ++s) {
    const std::size_t rep = class_representative(alphabet.state_digits(s), m, base);
    mass[rep] += x[static_cast<Eigen::Index>(s)];
  }
  return mass;
}

MarginalTable marginals_over_support(const Eigen::VectorXd& x, const MaskDistribution& q,
                                     const Alphabet& alphabet) {
  check_q_matches(q, alphabet);
  MarginalTable table;
  for (std::size_t mi : q.support()) {
    const Mask m = mask_from_lex_index(mi, q.n);
    for (const auto& [rep, mass] : marginals(x, m, alphabet)) table.mass[{mi, rep}] = mass;
  }
  return table;
}

Eigen::VectorXd apply_transition_via_marginals(const Eigen::VectorXd& x,
                                               const MaskDistribution& q,
                                               const Alphabet& alphabet, double tau) {
  check_q_matches(q, alphabet);
  const std::size_t tau_digit = alphabet.value_index(tau);
  const std::size_t states = alphabet.state_count();
  if (x.size() != static_cast<Eigen::Index>(states))
    throw std::invalid_argument("apply_transition_via_marginals: bad vector length");
  const std::size_t base = alphabet.size();

  const std::vector<std::size_t> support = q.support();
  std::vector<Mask> masks;
  std::vector<std::map<std::size_t, double>> class_mass;
  for (std::size_t mi : support) {
    masks.push_back(mask_from_lex_index(mi, q.n));
    class_mass.push_back(marginals(x, masks.back(), alphabet));
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(states));
  for (std::size_t v = 0; v < states; ++v) {
    const std::vector<std::size_t> digits = alphabet.state_digits(v);
    double acc = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      const Mask& m = masks[k];
      bool consistent = true;
      for (std::size_t i = 0; i < digits.size(); ++i)
        if (!m.bits[i] && digits[i] != tau_digit) {
          consistent = false;
          break;
        }
      if (!consistent) continue;
      acc += q.probs[support[k]] * class_mass[k].at(class_representative(digits, m, base));
    }
    y[static_cast<Eigen::Index>(v)] = acc;
  }
  return y;
}

InconsistentObservable::InconsistentObservable(std::size_t state, double residual)
    : std::runtime_error("reconstruct_marginals: observable vector is inconsistent at state " +
                         std::to_string(state) + " (residual " + std::to_string(residual) + ")"),
      state_(state),
      residual_(residual) {}

MarginalTable reconstruct_marginals(const Eigen::VectorXd& y, const MaskDistribution& q,
                                    const Alphabet& alphabet, double tau, double tol) {
  check_q_matches(q, alphabet);
  const std::size_t tau_digit = alphabet.value_index(tau);
  const std::size_t states = alphabet.state_count();
  if (y.size() != static_cast<Eigen::Index>(states))
    throw std::invalid_argument("reconstruct_marginals: bad vector length");
  const std::size_t base = alphabet.size();

  const std::vector<std::size_t> support = q.support();
  std::vector<Mask> masks;
  masks.reserve(support.size());
  for (std::size_t mi : support) masks.push_back(mask_from_lex_index(mi, q.n));

  // Consistent-mask sets M_{tau,v} for every outcome state.
  std::vector<std::vector<std::size_t>> consistent(states);  // indices into `support`
  for (std::size_t v = 0; v < states; ++v) {
    const std::vector<std::size_t> digits = alphabet.state_digits(v);
    for (std::size_t k = 0; k < support.size(); ++k) {
      bool ok = true;
      for (std::size_t i = 0; i < digits.size(); ++i)
        if (!masks[k].bits[i] && digits[i] != tau_digit) {
          ok = false;
          break;
        }
      if (ok) consistent[v].push_back(k);
    }
  }

  std::vector<std::size_t> order(states);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return consistent[a].size() < consistent[b].size();
  });

  MarginalTable table;
  for (std::size_t v : order) {
    const auto& mv = consistent[v];
    if (mv.empty()) continue;
    const std::vector<std::size_t> digits = alphabet.state_digits(v);
    const double yv = y[static_cast<Eigen::Index>(v)];

    if (mv.size() == 1) {
      const Mask& m = masks[mv[0]];
      table.mass[{support[mv[0]], class_representative(digits, m, base)}] =
          yv / q.probs[support[mv[0]]];
      continue;
    }

    // Conjunction of the consistent masks; v equals tau on every coordinate
    // where the conjunction is 0.
    Mask m_and;
    m_and.bits.assign(alphabet.n, 1);
    for (std::size_t k : mv)
      for (std::size_t i = 0; i < alphabet.n; ++i) m_and.bits[i] &= masks[k].bits[i];

    // For each consistent mask m_l, sum the already-known masses of the
    // classes [v']_{m_l} over representatives v' that agree with v except on
    // the coordinates free under (m_and, m_l).
    double q_sum = 0.0;
    std::vector<double> peel(mv.size(), 0.0);
    for (std::size_t li = 0; li < mv.size(); ++li) {
      const Mask& ml = masks[mv[li]];
      q_sum += q.probs[support[mv[li]]];
      std::vector<std::size_t> free_coords;
      for (std::size_t i = 0; i < alphabet.n; ++i)
        if (!m_and.bits[i] && ml.bits[i]) free_coords.push_back(i);
      std::vector<std::size_t> combo(free_coords.size(), 0);
      std::vector<std::size_t> vdigits = digits;
      while (true) {
        for (std::size_t i = 0; i < free_coords.size(); ++i) vdigits[free_coords[i]] = combo[i];
        bool equals_v = true;
        for (std::size_t i = 0; i < free_coords.size(); ++i)
          if (combo[i] != digits[free_coords[i]]) {
            equals_v = false;
            break;
          }
        if (!equals_v) {
          const auto it =
              table.mass.find({support[mv[li]], class_representative(vdigits, ml, base)});
          if (it == table.mass.end())
            throw std::logic_error("reconstruct_marginals: induction order violated");
          peel[li] += it->second;
        }
        std::size_t pos = 0;
        for (; pos < combo.size(); ++pos) {
          if (++combo[pos] < base) break;
          combo[pos] = 0;
        }
        if (pos == combo.size()) break;
      }
    }

    double numer = yv;
    for (std::size_t li = 0; li < mv.size(); ++li)
      numer += q.probs[support[mv[li]]] * peel[li];
    const double class_and_mass = numer / q_sum;
    for (std::size_t li = 0; li < mv.size(); ++li)
      table.mass[{support[mv[li]], class_representative(digits, masks[mv[li]], base)}] =
          class_and_mass - peel[li];
  }

  // Consistency: the reconstructed marginals must reproduce y exactly.
  for (std::size_t v = 0; v < states; ++v) {
    const std::vector<std::size_t> digits = alphabet.state_digits(v);
    double acc = 0.0;
    for (std::size_t k : consistent[v])
      acc += q.probs[support[k]] *
             table.mass.at({support[k], class_representative(digits, masks[k], base)});
    const double residual = std::abs(acc - y[static_cast<Eigen::Index>(v)]);
    if (residual > tol) throw InconsistentObservable(v, residual);
  }
  return table;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& t, double tol) {
  if (t.rows() != t.cols()) throw std::invalid_argument("null_space: matrix must be square");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  const double threshold = tol * sigma_max;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > threshold) ++rank;
  const Eigen::Index dim = t.cols() - rank;
  return svd.matrixV().rightCols(dim);
}

bool same_nullspace(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2, double tol) {
  if (t1.rows() != t2.rows() || t1.cols() != t2.cols())
    throw std::invalid_argument("same_nullspace: dimension mismatch");
  const Eigen::MatrixXd b1 = null_space(t1);
  const Eigen::MatrixXd b2 = null_space(t2);
  for (Eigen::Index j = 0; j < b1.cols(); ++j)
    if ((t2 * b1.col(j)).norm() > tol) return false;
  for (Eigen::Index j = 0; j < b2.cols(); ++j)
    if ((t1 * b2.col(j)).norm() > tol) return false;
  return true;
}

UniquenessResult unique_nonneg_solution(const Eigen::MatrixXd& t, const Eigen::VectorXd& y,
                                        double tol, const std::vector<std::size_t>& fixed_zero) {
  if (t.rows() != y.size())
    throw std::invalid_argument("unique_nonneg_solution: dimension mismatch");

  std::vector<bool> fixed(static_cast<std::size_t>(t.cols()), false);
  for (std::size_t i : fixed_zero) fixed.at(i) = true;
  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    if (!fixed[static_cast<std::size_t>(j)]) free_cols.push_back(j);

  Eigen::MatrixXd a(t.rows(), static_cast<Eigen::Index>(free_cols.size()));
  for (std::size_t j = 0; j < free_cols.size(); ++j)
    a.col(static_cast<Eigen::Index>(j)) = t.col(free_cols[j]);

  auto embed = [&](const Eigen::VectorXd& reduced) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(t.cols());
    for (std::size_t j = 0; j < free_cols.size(); ++j)
      full[free_cols[j]] = reduced[static_cast<Eigen::Index>(j)];
    return full;
  };

  auto solve = [&](Eigen::Index coord, double sign) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(a.cols());
    c[coord] = sign;
    const LpResult lp = solve_lp_min(a, y, c);
    if (lp.status == LpResult::Status::kInfeasible)
      throw std::runtime_error("unique_nonneg_solution: y is not a feasible observable");
    if (lp.status == LpResult::Status::kUnbounded)
      throw std::invalid_argument(
          "unique_nonneg_solution: feasible set unbounded (matrix is not column-stochastic)");
    return lp;
  };

  UniquenessResult result;
  result.unique = true;
  bool have_solution = false;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const LpResult lo = solve(j, 1.0);
    const LpResult hi = solve(j, -1.0);
    if (!have_solution) {
      result.solution = embed(lo.solution);
      have_solution = true;
    }
    const double gap = hi.solution[j] - lo.solution[j];
    if (gap > tol) {
      result.unique = false;
      result.split_coordinate = static_cast<std::size_t>(free_cols[static_cast<std::size_t>(j)]);
      result.witness_a = embed(lo.solution);
      result.witness_b = embed(hi.solution);
      return result;
    }
  }
  if (!have_solution) {
    // Every coordinate fixed at zero: feasible iff y == 0.
    if (y.norm() > tol)
      throw std::runtime_error("unique_nonneg_solution: y is not a feasible observable");
    result.solution = Eigen::VectorXd::Zero(t.cols());
  }
  return result;
}

AugmentedSystem augment_alphabet(const MaskDistribution& q, const Alphabet& alphabet) {
  check_q_matches(q, alphabet);
  if (alphabet.psi_index >= 0)
    throw std::invalid_argument("augment_alphabet: alphabet already augmented");

  std::vector<double> values = alphabet.values;
  const double psi = *std::max_element(values.begin(), values.end()) + 1.0;
  values.push_back(psi);

  AugmentedSystem aug;
  aug.alphabet = Alphabet(std::move(values), alphabet.n);
  aug.alphabet.psi_index = static_cast<int>(alphabet.size());
  aug.transition = build_transition(q, aug.alphabet, psi);

  const std::size_t original_states = alphabet.state_count();
  const std::size_t augmented_states = aug.alphabet.state_count();
  std::vector<bool> embedded(augmented_states, false);
  aug.embedded_index.reserve(original_states);
  for (std::size_t s = 0; s < original_states; ++s) {
    const std::size_t idx = aug.alphabet.state_index(alphabet.state_digits(s));
    aug.embedded_index.push_back(idx);
    embedded[idx] = true;
  }
  for (std::size_t s = 0; s < augmented_states; ++s)
    if (!embedded[s]) aug.added_states.push_back(s);
  return aug;
}

Eigen::VectorXd embed_distribution(const AugmentedSystem& aug, const Eigen::VectorXd& p) {
  if (p.size() != static_cast<Eigen::Index>(aug.embedded_index.size()))
    throw std::invalid_argument("embed_distribution: dimension mismatch");
  Eigen::VectorXd full =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(aug.alphabet.state_count()));
  for (std::size_t s = 0; s < aug.embedded_index.size(); ++s)
    full[static_cast<Eigen::Index>(aug.embedded_index[s])] = p[static_cast<Eigen::Index>(s)];
  return full;
}

}  // namespace misgan
