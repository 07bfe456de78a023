#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "misgan/masking.hpp"
#include "misgan/rng.hpp"

using namespace misgan;

TEST_CASE("apply_mask") {
  SUBCASE("hand values") {
    CHECK(apply_mask({0.5, 0.7}, Mask{{1, 0}}, 0.0) == std::vector<double>{0.5, 0.0});
    CHECK(apply_mask({0.2, 0.9}, Mask{{0, 1}}, 0.5) == std::vector<double>{0.5, 0.9});
  }
  SUBCASE("all-ones mask is the identity for any tau") {
    const std::vector<double> x = {0.1, -2.5, 3.0};
    for (double tau : {0.0, 0.5, -7.0})
      CHECK(apply_mask(x, Mask{{1, 1, 1}}, tau) == x);
  }
  SUBCASE("observed entries are bitwise unchanged, missing are exactly tau") {
    CounterRng rng(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(7);
      Mask m;
      m.bits.resize(7);
      for (std::size_t i = 0; i < 7; ++i) {
        x[i] = rng.uniform(-5, 5);
        m.bits[i] = rng.uniform() < 0.5 ? 0 : 1;
      }
      const double tau = rng.uniform(-1, 1);
      const auto y = apply_mask(x, m, tau);
      for (std::size_t i = 0; i < 7; ++i)
        CHECK(y[i] == (m.bits[i] ? x[i] : tau));
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(apply_mask({1.0}, Mask{{1, 1}}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("square mask") {
  CounterRng rng(11, 0);
  const ImageShape shape{28, 28};

  SUBCASE("k equal to the side gives all ones") {
    const Mask m = sample_mask(MaskMechanism::square(shape, 28), rng);
    CHECK(m.observed_count() == 784);
  }
  SUBCASE("9x9 observed square on 28x28 is about 90% missing") {
    const auto mech = MaskMechanism::square(shape, 9);
    for (int i = 0; i < 20; ++i) {
      const Mask m = sample_mask(mech, rng);
      CHECK(m.observed_count() == 81);
      CHECK(m.missing_rate() == doctest::Approx(1.0 - 81.0 / 784.0));
      // The observed region is one contiguous axis-aligned square.
      std::size_t top = 28, left = 28;
      for (std::size_t r = 0; r < 28; ++r)
        for (std::size_t c = 0; c < 28; ++c)
          if (m.bits[r * 28 + c]) {
            top = std::min(top, r);
            left = std::min(left, c);
          }
      for (std::size_t r = top; r < top + 9; ++r)
        for (std::size_t c = left; c < left + 9; ++c) CHECK(m.bits[r * 28 + c] == 1);
    }
  }
  SUBCASE("corner position is uniform (chi-square over 10^4 draws)") {
    // 7x7 square on an 8x8 image: 4 possible corners.
    const auto mech = MaskMechanism::square(ImageShape{8, 8}, 7);
    std::size_t counts[4] = {0, 0, 0, 0};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const Mask m = sample_mask(mech, rng);
      const bool top = m.bits[0 * 8 + 0] || m.bits[0 * 8 + 7];
      const bool left = m.bits[0 * 8 + 0] || m.bits[7 * 8 + 0];
      counts[(top ? 0 : 2) + (left ? 0 : 1)]++;
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected = draws / 4.0;
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    CHECK(chi2 < 11.34);  // chi-square(3 dof) at p = 0.01
  }
  SUBCASE("k too large") {
    CHECK_THROWS_AS(MaskMechanism::square(shape, 29), std::invalid_argument);
  }
}

TEST_CASE("dropout mask") {
  CounterRng rng(13, 0);
  SUBCASE("rate 0 and 1") {
    CHECK(sample_mask(MaskMechanism::dropout(10, 0.0), rng).observed_count() == 10);
    CHECK(sample_mask(MaskMechanism::dropout(10, 1.0), rng).observed_count() == 0);
  }
  SUBCASE("rate 0.9 concentration over many draws") {
    const auto mech = MaskMechanism::dropout(784, 0.9);
    const int draws = 10000;
    double observed = 0.0;
    for (int i = 0; i < draws; ++i) observed += sample_mask(mech, rng).observed_count();
    const double mean_fraction = observed / (784.0 * draws);
    // 3 sigma of a Binomial(784 * 10^4, 0.1) sample mean.
    const double sigma = std::sqrt(0.1 * 0.9 / (784.0 * draws));
    CHECK(std::abs(mean_fraction - 0.1) < 3 * sigma + 1e-6);
  }
  SUBCASE("rate out of range") {
    CHECK_THROWS_AS(MaskMechanism::dropout(10, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(MaskMechanism::dropout(10, -0.1), std::invalid_argument);
  }
}

TEST_CASE("variable rectangle mask") {
  CounterRng rng(17, 0);
  const auto mech = MaskMechanism::variable_rect(ImageShape{28, 28});

  SUBCASE("side lengths stay within [ceil(0.25 L), floor(0.75 L)]") {
    double worst_missing = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Mask m = sample_mask(mech, rng);
      const std::size_t count = m.observed_count();
      CHECK(count >= 49);    // 7x7 minimum -> 93.75% missing at worst
      CHECK(count <= 441);   // 21x21 maximum -> 43.75% missing at best
      worst_missing = std::max(worst_missing, m.missing_rate());
    }
    CHECK(worst_missing <= 0.9375);
  }
  SUBCASE("mean missing rate is 75%") {
    // E[w] = E[h] = 14 on side 28, so the exact mean missing rate is
    // 1 - 196/784 = 0.75; check the empirical mean tightly.
    double missing = 0.0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) missing += sample_mask(mech, rng).missing_rate();
    CHECK(missing / draws == doctest::Approx(0.75).epsilon(0.01));
  }
}

TEST_CASE("quadrant mask") {
  CounterRng rng(19, 0);
  const auto mech = MaskMechanism::quadrant(ImageShape{28, 28});

  SUBCASE("observed block is one full 14x14 quadrant") {
    for (int i = 0; i < 20; ++i) {
      const Mask m = sample_mask(mech, rng);
      CHECK(m.observed_count() == 196);
    }
  }
  SUBCASE("two draws overlap only when they pick the same quadrant") {
    for (int i = 0; i < 50; ++i) {
      const Mask a = sample_mask(mech, rng);
      const Mask b = sample_mask(mech, rng);
      bool overlap = false;
      for (std::size_t k = 0; k < a.bits.size(); ++k)
        if (a.bits[k] && b.bits[k]) overlap = true;
      CHECK(overlap == (a.bits == b.bits));
    }
  }
  SUBCASE("quadrant choice is uniform (chi-square over 10^4 draws)") {
    std::size_t counts[4] = {0, 0, 0, 0};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const Mask m = sample_mask(mech, rng);
      const bool top = m.bits[0] || m.bits[14];
      const bool left = m.bits[0] || m.bits[14 * 28];
      counts[(top ? 0 : 2) + (left ? 0 : 1)]++;
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected = draws / 4.0;
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    CHECK(chi2 < 11.34);
  }
  SUBCASE("odd dimensions rejected") {
    CHECK_THROWS_AS(MaskMechanism::quadrant(ImageShape{27, 28}), std::invalid_argument);
  }
}

TEST_CASE("seeded determinism across all mechanisms") {
  for (const auto& mech :
       {MaskMechanism::square(ImageShape{16, 16}, 5), MaskMechanism::dropout(64, 0.3),
        MaskMechanism::variable_rect(ImageShape{16, 16}),
        MaskMechanism::quadrant(ImageShape{16, 16})}) {
    CounterRng a(77, RngStream::kMask), b(77, RngStream::kMask);
    for (int i = 0; i < 20; ++i) CHECK(sample_mask(mech, a).bits == sample_mask(mech, b).bits);
  }
}

TEST_CASE("masks contain only zeros and ones") {
  CounterRng rng(23, 0);
  for (const auto& mech :
       {MaskMechanism::square(ImageShape{10, 12}, 3), MaskMechanism::dropout(64, 0.5),
        MaskMechanism::variable_rect(ImageShape{12, 10}),
        MaskMechanism::quadrant(ImageShape{10, 10})}) {
    for (int i = 0; i < 20; ++i)
      for (std::uint8_t bit : sample_mask(mech, rng).bits) CHECK((bit == 0 || bit == 1));
  }
}
