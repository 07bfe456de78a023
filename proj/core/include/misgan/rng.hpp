#pragma once

#include <cstdint>

namespace misgan {

/// Named random streams. Every component draws from its own stream so that
/// changing how one component consumes randomness does not perturb the others.
enum class RngStream : std::uint32_t {
  kInit = 0,       // parameter initialization
  kData = 1,       // dataset / minibatch index sampling
  kMask = 2,       // mask mechanism sampling
  kNoiseZ = 3,     // data generator noise z
  kNoiseEps = 4,   // mask generator noise epsilon
  kNoiseOmega = 5, // imputer noise omega
  kEval = 6,       // evaluation-time sampling
  kFeatureMap = 7, // random linear feature projections
  kBaseline = 8,   // baseline imputers (matrix factorization init)
};

/// Counter-based PRNG (Philox4x32-10). The generator is a pure function of
/// (seed, stream, position): the position counts 64-bit outputs consumed and
/// can be saved and restored, which is all the state a checkpoint needs.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream)
      : CounterRng(seed, static_cast<std::uint32_t>(stream)) {}
  CounterRng(std::uint64_t seed, std::uint32_t stream);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive. Uses 64-bit modulo;
  /// the bias is below 2^-50 for any n this project uses.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller. Always consumes exactly two 64-bit
  /// draws so the stream position stays a simple draw count.
  double normal();

  /// Number of 64-bit outputs consumed so far.
  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position) { position_ = position; }

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
  std::uint64_t position_ = 0;
};

}  // namespace misgan
