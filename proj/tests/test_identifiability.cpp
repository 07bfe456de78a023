#include <doctest.h>

#include <cmath>

#include "misgan/identifiability.hpp"
#include "oracles.hpp"

using namespace misgan;
using namespace misgan::testing;

namespace {

MaskDistribution point_mass_on(std::size_t n, std::size_t mask_index) {
  std::vector<double> probs(std::size_t{1} << n, 0.0);
  probs[mask_index] = 1.0;
  return MaskDistribution::from_probs(n, probs);
}

const Alphabet kBit1({0.0, 1.0}, 1);
const Alphabet kBit2({0.0, 1.0}, 2);

}  // namespace

TEST_CASE("enumerate_masks is lexicographic") {
  const auto m1 = enumerate_masks(1);
  REQUIRE(m1.size() == 2);
  CHECK(m1[0].bits == std::vector<std::uint8_t>{0});
  CHECK(m1[1].bits == std::vector<std::uint8_t>{1});

  const auto m2 = enumerate_masks(2);
  REQUIRE(m2.size() == 4);
  CHECK(m2[0].bits == std::vector<std::uint8_t>{0, 0});
  CHECK(m2[1].bits == std::vector<std::uint8_t>{0, 1});
  CHECK(m2[2].bits == std::vector<std::uint8_t>{1, 0});
  CHECK(m2[3].bits == std::vector<std::uint8_t>{1, 1});

  CHECK(enumerate_masks(4).size() == 16);
  CHECK_THROWS_AS(enumerate_masks(64), std::invalid_argument);
}

TEST_CASE("build_transition hand instances") {
  SUBCASE("n=1 fair coin mask, tau=0") {
    const auto q = MaskDistribution::from_probs(1, {0.5, 0.5});
    const auto t = build_transition(q, kBit1, 0.0);
    CHECK(t.entries(0, 0) == doctest::Approx(1.0));
    CHECK(t.entries(1, 0) == doctest::Approx(0.0));
    CHECK(t.entries(0, 1) == doctest::Approx(0.5));
    CHECK(t.entries(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("fully observed gives identity for any tau") {
    const auto q = point_mass_on(2, 3);  // m = (1,1)
    for (double tau : {0.0, 1.0}) {
      const auto t = build_transition(q, kBit2, tau);
      CHECK((t.entries - Eigen::MatrixXd::Identity(4, 4)).norm() == doctest::Approx(0.0));
    }
  }
  SUBCASE("nothing observed, tau=0") {
    const auto q = point_mass_on(1, 0);
    const auto t = build_transition(q, kBit1, 0.0);
    CHECK(t.entries(0, 0) == 1.0);
    CHECK(t.entries(0, 1) == 1.0);
    CHECK(t.entries(1, 0) == 0.0);
    CHECK(t.entries(1, 1) == 0.0);
  }
  SUBCASE("tau outside P is rejected") {
    const auto q = point_mass_on(1, 1);
    CHECK_THROWS_AS(build_transition(q, kBit1, 0.5), std::invalid_argument);
  }
}

TEST_CASE("build_transition matches the brute-force oracle and is column-stochastic") {
  CounterRng rng(21, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(3);
    const std::size_t p = 2 + rng.uniform_index(2);
    std::vector<double> values;
    for (std::size_t i = 0; i < p; ++i) values.push_back(static_cast<double>(i));
    const Alphabet alphabet(values, n);
    const auto q = random_mask_distribution(n, rng);
    const double tau = values[rng.uniform_index(p)];

    const auto t = build_transition(q, alphabet, tau);
    const Eigen::MatrixXd oracle = brute_force_transition(q, alphabet, tau);
    CHECK((t.entries - oracle).cwiseAbs().maxCoeff() <= 1e-15);

    const Eigen::VectorXd col_sums = t.entries.colwise().sum();
    for (Eigen::Index j = 0; j < col_sums.size(); ++j)
      CHECK(std::abs(col_sums[j] - 1.0) <= 1e-12);
  }
}

TEST_CASE("apply_transition_via_marginals equals the matrix route") {
  SUBCASE("hand instance") {
    const auto q = MaskDistribution::from_probs(1, {0.5, 0.5});
    Eigen::VectorXd x(2);
    x << 0.3, 0.7;
    const Eigen::VectorXd y = apply_transition_via_marginals(x, q, kBit1, 0.0);
    CHECK(y[0] == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.35).epsilon(1e-12));
  }
  SUBCASE("fully observed returns x; zero maps to zero") {
    const auto q = point_mass_on(2, 3);
    CounterRng rng(5, 0);
    const Eigen::VectorXd x = random_distribution_vector(4, rng);
    CHECK((apply_transition_via_marginals(x, q, kBit2, 1.0) - x).norm() == doctest::Approx(0.0));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    CHECK(apply_transition_via_marginals(zero, q, kBit2, 0.0).norm() == 0.0);
  }
  SUBCASE("random instances agree elementwise within 1e-12") {
    CounterRng rng(22, 0);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(3);
      const Alphabet alphabet({0.0, 1.0, 2.0}, n);
      const auto q = random_mask_distribution(n, rng);
      const double tau = alphabet.values[rng.uniform_index(3)];
      Eigen::VectorXd x(static_cast<Eigen::Index>(alphabet.state_count()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
      const auto t = build_transition(q, alphabet, tau);
      const Eigen::VectorXd via_marginals = apply_transition_via_marginals(x, q, alphabet, tau);
      CHECK((via_marginals - t.entries * x).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("marginals") {
  CounterRng rng(31, 0);
  const Eigen::VectorXd x = random_distribution_vector(4, rng);

  SUBCASE("all-ones mask gives singletons") {
    const auto m = marginals(x, Mask{{1, 1}}, kBit2);
    REQUIRE(m.size() == 4);
    for (const auto& [rep, mass] : m) CHECK(mass == x[static_cast<Eigen::Index>(rep)]);
  }
  SUBCASE("all-zeros mask gives the total mass") {
    const auto m = marginals(x, Mask{{0, 0}}, kBit2);
    REQUIRE(m.size() == 1);
    CHECK(m.begin()->second == doctest::Approx(x.sum()).epsilon(1e-14));
  }
  SUBCASE("uniform x, first coordinate observed") {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.25);
    const auto m = marginals(u, Mask{{1, 0}}, kBit2);
    REQUIRE(m.size() == 2);
    for (const auto& [rep, mass] : m) CHECK(mass == doctest::Approx(0.5));
  }
  SUBCASE("class masses sum to the total for any mask") {
    for (std::size_t mi = 0; mi < 4; ++mi) {
      const auto m = marginals(x, mask_from_lex_index(mi, 2), kBit2);
      double total = 0.0;
      for (const auto& [rep, mass] : m) total += mass;
      CHECK(total == doctest::Approx(x.sum()).epsilon(1e-13));
    }
  }
}

TEST_CASE("null_space") {
  SUBCASE("identity has an empty basis") {
    CHECK(null_space(Eigen::MatrixXd::Identity(3, 3)).cols() == 0);
  }
  SUBCASE("rank-1 column-stochastic example") {
    Eigen::MatrixXd t(2, 2);
    t << 1, 1, 0, 0;
    const Eigen::MatrixXd basis = null_space(t);
    REQUIRE(basis.cols() == 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(basis(0, 0)) - inv_sqrt2) <= 1e-12);
    CHECK(basis(0, 0) == doctest::Approx(-basis(1, 0)));
    CHECK((t * basis).norm() <= 1e-12);
  }
  SUBCASE("observing everything with positive probability gives full rank") {
    CounterRng rng(41, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(2);
      auto q = random_mask_distribution(n, rng);
      if (q.probs.back() == 0.0) {  // force q(1...1) > 0
        q.probs.back() = 0.3;
        double sum = 0.0;
        for (double p : q.probs) sum += p;
        for (double& p : q.probs) p /= sum;
      }
      const Alphabet alphabet({0.0, 1.0}, n);
      const auto t = build_transition(q, alphabet, 0.0);
      CHECK(null_space(t.entries).cols() == 0);
    }
  }
}

TEST_CASE("same_nullspace") {
  Eigen::MatrixXd rank1(2, 2), id = Eigen::MatrixXd::Identity(2, 2);
  rank1 << 1, 1, 0, 0;
  CHECK(same_nullspace(rank1, rank1, 1e-10));
  CHECK_FALSE(same_nullspace(id, rank1, 1e-10));

  // q(m=0)=1: tau=0 and tau=1 give different matrices with the same kernel.
  const auto q = point_mass_on(1, 0);
  const auto t0 = build_transition(q, kBit1, 0.0);
  const auto t1 = build_transition(q, kBit1, 1.0);
  CHECK((t0.entries - t1.entries).norm() > 0.5);
  CHECK(same_nullspace(t0.entries, t1.entries, 1e-10));
}

TEST_CASE("theorem 1: null space does not depend on tau (random spot check)") {
  CounterRng rng(51, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(3);
    const std::size_t p = 2 + rng.uniform_index(2);
    std::vector<double> values;
    for (std::size_t i = 0; i < p; ++i) values.push_back(static_cast<double>(i) * 0.5);
    const Alphabet alphabet(values, n);
    const auto q = random_mask_distribution(n, rng);
    std::vector<TransitionMatrix> ts;
    for (double tau : values) ts.push_back(build_transition(q, alphabet, tau));
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
      CHECK(same_nullspace(ts[i].entries, ts[i + 1].entries, 1e-8));
  }
}

TEST_CASE("reconstruct_marginals") {
  SUBCASE("fully observed: table equals y on singletons") {
    CounterRng rng(61, 0);
    const auto q = point_mass_on(2, 3);
    const Eigen::VectorXd x = random_distribution_vector(4, rng);
    const auto t = build_transition(q, kBit2, 0.0);
    const Eigen::VectorXd y = t.entries * x;
    const MarginalTable table = reconstruct_marginals(y, q, kBit2, 0.0);
    REQUIRE(table.mass.size() == 4);
    for (const auto& [key, mass] : table.mass) {
      CHECK(key.first == 3);
      CHECK(mass == doctest::Approx(y[static_cast<Eigen::Index>(key.second)]).epsilon(1e-14));
    }
  }

  SUBCASE("round-trip equals brute-force marginals (random, |support| <= 3)") {
    CounterRng rng(62, 0);
    for (int trial = 0; trial < 60; ++trial) {
      const auto q = random_mask_distribution(2, rng, 3);
      const double tau = rng.uniform_index(2) == 0 ? 0.0 : 1.0;
      const Eigen::VectorXd x = random_distribution_vector(4, rng);
      const auto t = build_transition(q, kBit2, tau);
      const MarginalTable table = reconstruct_marginals(t.entries * x, q, kBit2, tau);

      const auto tuples = all_value_tuples(kBit2);
      for (std::size_t mi : q.support()) {
        const Mask m = mask_from_lex_index(mi, 2);
        for (std::size_t v = 0; v < tuples.size(); ++v) {
          auto digits = kBit2.state_digits(v);
          for (std::size_t i = 0; i < digits.size(); ++i)
            if (!m.bits[i]) digits[i] = 0;
          const double got = table.mass.at({mi, kBit2.state_index(digits)});
          const double expected = brute_force_marginal(x, kBit2, m, tuples[v]);
          CHECK(std::abs(got - expected) <= 1e-10);
        }
      }
    }
  }

  SUBCASE("two single-coordinate masks recover the true coordinate marginals") {
    CounterRng rng(63, 0);
    const auto q = MaskDistribution::from_probs(2, {0.0, 0.5, 0.5, 0.0});
    const Eigen::VectorXd x = random_distribution_vector(4, rng);
    const auto t = build_transition(q, kBit2, 0.0);
    const MarginalTable table = reconstruct_marginals(t.entries * x, q, kBit2, 0.0);
    // mask (1,0): P(first coordinate = 0) and = 1.
    CHECK(table.mass.at({2, kBit2.state_index({0, 0})}) ==
          doctest::Approx(x[0] + x[1]).epsilon(1e-12));
    CHECK(table.mass.at({2, kBit2.state_index({1, 0})}) ==
          doctest::Approx(x[2] + x[3]).epsilon(1e-12));
    // mask (0,1): P(second coordinate = 0) and = 1.
    CHECK(table.mass.at({1, kBit2.state_index({0, 0})}) ==
          doctest::Approx(x[0] + x[2]).epsilon(1e-12));
    CHECK(table.mass.at({1, kBit2.state_index({0, 1})}) ==
          doctest::Approx(x[1] + x[3]).epsilon(1e-12));
  }

  SUBCASE("inconsistent observable is rejected with the offending state") {
    const auto q = point_mass_on(1, 0);  // everything masked to tau
    Eigen::VectorXd y(2);
    y << 0.6, 0.4;  // mass at state 1 cannot be produced with tau=0
    try {
      reconstruct_marginals(y, q, kBit1, 0.0);
      FAIL("expected InconsistentObservable");
    } catch (const InconsistentObservable& e) {
      CHECK(e.state() == 1);
      CHECK(e.residual() == doctest::Approx(0.4));
    }
  }
}

TEST_CASE("theorem 2: null directions preserve exactly the support marginals") {
  CounterRng rng(71, 0);
  int checked = 0;
  for (int trial = 0; trial < 80 && checked < 25; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(2);
    const Alphabet alphabet({0.0, 1.0}, n);
    const auto q = random_mask_distribution(n, rng);
    const double tau = 0.0;
    const auto t = build_transition(q, alphabet, tau);
    const Eigen::MatrixXd basis = null_space(t.entries);
    if (basis.cols() == 0) continue;

    const Eigen::VectorXd x_a = random_distribution_vector(alphabet.state_count(), rng);
    const Eigen::VectorXd v = basis.col(0);
    double scale = 1e9;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] < 0.0) scale = std::min(scale, -x_a[i] / v[i]);
    const Eigen::VectorXd x_b = x_a + 0.5 * scale * v;
    REQUIRE(x_b.minCoeff() >= 0.0);
    REQUIRE((x_b - x_a).norm() > 1e-12);

    // Same masked distribution...
    CHECK((t.entries * x_a - t.entries * x_b).cwiseAbs().maxCoeff() <= 1e-10);
    // ...and identical marginals on every supported mask.
    for (std::size_t mi : q.support()) {
      const Mask m = mask_from_lex_index(mi, n);
      const auto ma = marginals(x_a, m, alphabet);
      const auto mb = marginals(x_b, m, alphabet);
      for (const auto& [rep, mass] : ma)
        CHECK(std::abs(mass - mb.at(rep)) <= 1e-10);
    }
    // Negative control: an unrelated x generically changes the marginals,
    // provided some supported mask observes at least one coordinate.
    bool observes_something = false;
    for (std::size_t mi : q.support())
      if (mi != 0) observes_something = true;
    if (observes_something) {
      const Eigen::VectorXd x_c = random_distribution_vector(alphabet.state_count(), rng);
      double max_diff = 0.0;
      for (std::size_t mi : q.support()) {
        const Mask m = mask_from_lex_index(mi, n);
        const auto ma = marginals(x_a, m, alphabet);
        const auto mc = marginals(x_c, m, alphabet);
        for (const auto& [rep, mass] : ma)
          max_diff = std::max(max_diff, std::abs(mass - mc.at(rep)));
      }
      CHECK(max_diff > 1e-6);
    }
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("unique_nonneg_solution") {
  SUBCASE("full-rank system is unique with p = T^-1 y") {
    const auto q = MaskDistribution::from_probs(1, {0.3, 0.7});
    const auto t = build_transition(q, kBit1, 0.0);
    Eigen::VectorXd p_star(2);
    p_star << 0.25, 0.75;
    const auto r = unique_nonneg_solution(t.entries, t.entries * p_star);
    CHECK(r.unique);
    CHECK((r.solution - p_star).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("fully-masked system is never unique") {
    Eigen::MatrixXd t(2, 2);
    t << 1, 1, 0, 0;
    Eigen::VectorXd y(2);
    y << 1, 0;
    const auto r = unique_nonneg_solution(t, y);
    CHECK_FALSE(r.unique);
    // Witnesses are distinct feasible non-negative solutions.
    CHECK((r.witness_a - r.witness_b).cwiseAbs().maxCoeff() > 1e-6);
    for (const Eigen::VectorXd* w : {&r.witness_a, &r.witness_b}) {
      CHECK(w->minCoeff() >= -1e-12);
      CHECK((t * *w - y).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("sparse point mass is pinned by non-negativity despite a null space") {
    const auto q = MaskDistribution::from_probs(2, {0.0, 0.5, 0.5, 0.0});
    const auto t = build_transition(q, kBit2, 0.0);
    CHECK(null_space(t.entries).cols() == 1);  // spanned by (1,-1,-1,1)
    Eigen::VectorXd p_star = Eigen::VectorXd::Zero(4);
    p_star[0] = 1.0;
    const auto r = unique_nonneg_solution(t.entries, t.entries * p_star);
    CHECK(r.unique);
    CHECK((r.solution - p_star).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("infeasible y raises") {
    Eigen::MatrixXd t(2, 2);
    t << 1, 1, 0, 0;
    Eigen::VectorXd y(2);
    y << 0.2, 0.8;  // second coordinate unreachable
    CHECK_THROWS_AS(unique_nonneg_solution(t, y), std::runtime_error);
  }
}

TEST_CASE("corollary 1: the uniqueness verdict does not depend on tau") {
  CounterRng rng(81, 0);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(2);
    const Alphabet alphabet({0.0, 1.0}, n);
    const auto q = random_mask_distribution(n, rng);
    const Eigen::VectorXd p_star = random_distribution_vector(alphabet.state_count(), rng);
    int verdicts = 0;
    for (double tau : alphabet.values) {
      const auto t = build_transition(q, alphabet, tau);
      verdicts += unique_nonneg_solution(t.entries, t.entries * p_star).unique ? 1 : 0;
    }
    CHECK((verdicts == 0 || verdicts == 2));
  }
}

TEST_CASE("augment_alphabet") {
  SUBCASE("dimensions and psi placement") {
    const auto q = MaskDistribution::from_probs(1, {0.5, 0.5});
    const AugmentedSystem aug = augment_alphabet(q, kBit1);
    CHECK(aug.alphabet.size() == 3);
    CHECK(aug.alphabet.psi_index == 2);
    CHECK(aug.transition.entries.rows() == 3);
    CHECK(aug.alphabet.values[2] == 2.0);  // max(P) + 1
    CHECK(aug.embedded_index.size() == 2);
    CHECK(aug.added_states.size() == 1);
  }
  SUBCASE("full observation keeps the augmented system unique") {
    const auto q = point_mass_on(1, 1);
    const AugmentedSystem aug = augment_alphabet(q, kBit1);
    Eigen::VectorXd p_star(2);
    p_star << 0.4, 0.6;
    const Eigen::VectorXd embedded = embed_distribution(aug, p_star);
    const auto r = unique_nonneg_solution(aug.transition.entries,
                                          aug.transition.entries * embedded, 1e-8,
                                          aug.added_states);
    CHECK(r.unique);
    CHECK((r.solution - embedded).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("corollary 2: a non-unique problem stays non-unique with tau = psi") {
    const auto q = point_mass_on(1, 0);
    Eigen::VectorXd p_star(2);
    p_star << 1.0, 0.0;
    // Original system: not unique.
    const auto t = build_transition(q, kBit1, 0.0);
    CHECK_FALSE(unique_nonneg_solution(t.entries, t.entries * p_star).unique);
    // Augmented system with p(s) = 0 outside the embedded states: not unique.
    const AugmentedSystem aug = augment_alphabet(q, kBit1);
    const Eigen::VectorXd embedded = embed_distribution(aug, p_star);
    const auto r = unique_nonneg_solution(aug.transition.entries,
                                          aug.transition.entries * embedded, 1e-8,
                                          aug.added_states);
    CHECK_FALSE(r.unique);
    for (std::size_t s : aug.added_states) {
      CHECK(r.witness_a[static_cast<Eigen::Index>(s)] == 0.0);
      CHECK(r.witness_b[static_cast<Eigen::Index>(s)] == 0.0);
    }
  }
}

TEST_CASE("alphabet guards") {
  CHECK_THROWS_AS(Alphabet({0.0, 0.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Alphabet({0.0, 1.0}, 20), std::invalid_argument);  // 2^20 > cap
  CHECK_THROWS_AS(kBit1.value_index(0.25), std::invalid_argument);
  CHECK(kBit2.state_index({1, 0}) == 2);
  CHECK(kBit2.state_digits(2) == std::vector<std::size_t>{1, 0});
}
