#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "misgan/masking.hpp"

namespace misgan {

/// Hard cap on |P|^n; this module is exact and dense by design.
constexpr std::size_t kStateSpaceCap = 100000;
constexpr std::size_t kMaskEnumLimit = 20;

/// Finite per-coordinate value set P and the dimensionality n. States are the
/// elements of I = P^n, indexed lexicographically with the first coordinate
/// most significant. Augmented alphabets carry the extra symbol psi at
/// psi_index (see augment_alphabet).
struct Alphabet {
  std::vector<double> values;
  std::size_t n = 0;
  int psi_index = -1;

  Alphabet() = default;
  Alphabet(std::vector<double> values, std::size_t n);

  std::size_t size() const { return values.size(); }
  std::size_t state_count() const;
  /// Index of an exact value in P; throws if the value is not in P.
  std::size_t value_index(double value) const;

  std::vector<std::size_t> state_digits(std::size_t state) const;
  std::size_t state_index(const std::vector<std::size_t>& digits) const;
};

/// Distribution over masks M = {0,1}^n in lexicographic order.
struct MaskDistribution {
  std::size_t n = 0;
  std::vector<double> probs;

  static MaskDistribution from_probs(std::size_t n, std::vector<double> probs);
  /// Indices of masks with q(m) > 0.
  std::vector<std::size_t> support() const;
};

/// Distribution over states I = P^n in lexicographic order.
struct DiscreteDistribution {
  std::vector<double> probs;
  static DiscreteDistribution from_probs(std::vector<double> probs);
};

std::size_t mask_lex_index(const Mask& m);
Mask mask_from_lex_index(std::size_t index, std::size_t n);
std::vector<Mask> enumerate_masks(std::size_t n, std::size_t limit = kMaskEnumLimit);

/// Column-stochastic transition matrix T_{q,tau}: entry (t, s) is the
/// probability that state s masked by f_tau lands on outcome t.
struct TransitionMatrix {
  Eigen::MatrixXd entries;
  double tau = 0.0;
  std::size_t tau_index = 0;
};

TransitionMatrix build_transition(const MaskDistribution& q, const Alphabet& alphabet,
                                  double tau);

/// Applies T_{q,tau} to x through the marginal identity
/// (T x)(v) = sum over masks m consistent with (tau, v) of q(m) x([v]_m),
/// without materializing the matrix.
Eigen::VectorXd apply_transition_via_marginals(const Eigen::VectorXd& x,
                                               const MaskDistribution& q,
                                               const Alphabet& alphabet, double tau);

/// Masses of the equivalence classes of ~_m (v ~_m u iff v(*)m == u(*)m).
/// A class is keyed by its canonical representative: the state whose
/// unobserved digits are set to value index 0.
std::map<std::size_t, double> marginals(const Eigen::VectorXd& x, const Mask& m,
                                        const Alphabet& alphabet);

/// Marginal masses for every mask in the support of q, keyed by
/// (mask lexicographic index, canonical class representative).
struct MarginalTable {
  std::map<std::pair<std::size_t, std::size_t>, double> mass;
};

MarginalTable marginals_over_support(const Eigen::VectorXd& x, const MaskDistribution& q,
                                     const Alphabet& alphabet);

/// Thrown by reconstruct_marginals when y is not a consistent masked image.
class InconsistentObservable : public std::runtime_error {
 public:
  InconsistentObservable(std::size_t state, double residual);
  std::size_t state() const { return state_; }
  double residual() const { return residual_; }

 private:
  std::size_t state_;
  double residual_;
};

/// Inverts y = T_{q,tau} x to the full marginal collection
/// {x([v]_m) : m in supp(q)} by induction on the number of support masks
/// consistent with each outcome state: single-mask outcomes are divided by
/// q(m) directly, and ties among several masks are resolved through the
/// conjunction mask (the AND of the consistent masks), peeling off classes
/// already determined at lower levels.
MarginalTable reconstruct_marginals(const Eigen::VectorXd& y, const MaskDistribution& q,
                                    const Alphabet& alphabet, double tau,
                                    double tol = 1e-8);

/// Orthonormal basis of the null space (columns), via SVD with a relative
/// singular-value threshold tol * sigma_max.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& t, double tol = 1e-10);

/// True iff each null-space basis vector of one matrix is annihilated by the
/// other, both ways, with residual at most tol.
bool same_nullspace(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2, double tol);

struct UniquenessResult {
  bool unique = false;
  Eigen::VectorXd solution;           // a feasible point (the solution when unique)
  Eigen::VectorXd witness_a;          // two distinct feasible points when not unique
  Eigen::VectorXd witness_b;
  std::size_t split_coordinate = 0;   // coordinate with max-min gap when not unique
};

/// Decides whether {p >= 0 : T p = y} is a single point by solving, for each
/// coordinate, the two linear programs min/max p_i over the feasible set.
/// Coordinates listed in fixed_zero are pinned to zero (used by the
/// augmented-alphabet check). Throws std::runtime_error when y is infeasible.
UniquenessResult unique_nonneg_solution(const Eigen::MatrixXd& t, const Eigen::VectorXd& y,
                                        double tol = 1e-8,
                                        const std::vector<std::size_t>& fixed_zero = {});

/// Alphabet augmented with a fill symbol psi outside P (represented by the
/// sentinel value max(P) + 1) and the transition matrix over (P')^n built
/// with tau = psi. embedded_index maps each original state to its index in
/// the augmented state space; added_states lists the remaining indices.
struct AugmentedSystem {
  Alphabet alphabet;
  TransitionMatrix transition;
  std::vector<std::size_t> embedded_index;
  std::vector<std::size_t> added_states;
};

AugmentedSystem augment_alphabet(const MaskDistribution& q, const Alphabet& alphabet);

/// Embeds a distribution over I into the augmented space (zeros on I' \ I).
Eigen::VectorXd embed_distribution(const AugmentedSystem& aug, const Eigen::VectorXd& p);

}  // namespace misgan
