#include "misgan/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace misgan {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

struct Block {
  std::uint32_t v[4];
};

inline void philox_round(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr[0] = hi1 ^ ctr[1] ^ k0;
  ctr[1] = lo1;
  ctr[2] = hi0 ^ ctr[3] ^ k1;
  ctr[3] = lo0;
}

// Philox4x32-10: counter = (block_lo, block_hi, stream, 0), key = seed.
Block philox_block(std::uint64_t seed, std::uint32_t stream, std::uint64_t block) {
  std::uint32_t ctr[4] = {
      static_cast<std::uint32_t>(block),
      static_cast<std::uint32_t>(block >> 32),
      stream,
      0u,
  };
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return Block{{ctr[0], ctr[1], ctr[2], ctr[3]}};
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t stream)
    : seed_(seed), stream_(stream) {}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t block = position_ >> 1;
  const bool high_half = (position_ & 1u) != 0;
  ++position_;
  const Block b = philox_block(seed_, stream_, block);
  const int base = high_half ? 2 : 0;
  return (static_cast<std::uint64_t>(b.v[base + 1]) << 32) | b.v[base];
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t CounterRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("CounterRng::uniform_index: n must be positive");
  return next_u64() % n;
}

double CounterRng::normal() {
  // u1 in (0,1]: shift away from zero so log() stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace misgan
