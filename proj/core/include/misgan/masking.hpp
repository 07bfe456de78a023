#pragma once

#include <cstdint>
#include <vector>

#include "misgan/rng.hpp"

namespace misgan {

/// Binary mask over a data vector; bit d == 1 means coordinate d is observed.
/// Spatial masks are stored flattened row-major to match data vectors.
struct Mask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t observed_count() const;
  double missing_rate() const;
};

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t pixels() const { return height * width; }
};

enum class MechanismKind { kSquare, kDropout, kVariableRect, kQuadrant };

/// MCAR mask samplers: a k x k observed square at a uniform position,
/// independent Bernoulli dropout, a variable-size observed rectangle with
/// each side drawn uniformly from 25% to 75% of the image length, and one of
/// four non-overlapping observed quadrants.
struct MaskMechanism {
  MechanismKind kind = MechanismKind::kDropout;
  ImageShape image_shape;   // spatial kinds
  std::size_t square_k = 0; // kSquare
  double dropout_rate = 0;  // kDropout
  std::size_t dim = 0;      // mask length (h*w for spatial kinds)

  static MaskMechanism square(ImageShape shape, std::size_t k);
  static MaskMechanism dropout(std::size_t n, double rate);
  static MaskMechanism variable_rect(ImageShape shape);
  static MaskMechanism quadrant(ImageShape shape);
};

Mask sample_mask(const MaskMechanism& mechanism, CounterRng& rng);

/// Masking operator f_tau(x, m) = x (*) m + tau * complement(m).
std::vector<double> apply_mask(const std::vector<double>& x, const Mask& m, double tau);

}  // namespace misgan
