#include "misgan/masking.hpp"

#include <stdexcept>

namespace misgan {

std::size_t Mask::observed_count() const {
  std::size_t c = 0;
  for (std::uint8_t b : bits) c += b;
  return c;
}

double Mask::missing_rate() const {
  if (bits.empty()) return 0.0;
  return 1.0 - static_cast<double>(observed_count()) / static_cast<double>(bits.size());
}

MaskMechanism MaskMechanism::square(ImageShape shape, std::size_t k) {
  if (shape.pixels() == 0) throw std::invalid_argument("square mechanism: empty image shape");
  if (k == 0 || k > shape.height || k > shape.width)
    throw std::invalid_argument("square mechanism: k must fit inside the image");
  MaskMechanism m;
  m.kind = MechanismKind::kSquare;
  m.image_shape = shape;
  m.square_k = k;
  m.dim = shape.pixels();
  return m;
}

MaskMechanism MaskMechanism::dropout(std::size_t n, double rate) {
  if (n == 0) throw std::invalid_argument("dropout mechanism: n must be positive");
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("dropout mechanism: rate must lie in [0,1]");
  MaskMechanism m;
  m.kind = MechanismKind::kDropout;
  m.dropout_rate = rate;
  m.dim = n;
  return m;
}

MaskMechanism MaskMechanism::variable_rect(ImageShape shape) {
  if (shape.pixels() == 0) throw std::invalid_argument("variable_rect mechanism: empty image shape");
  MaskMechanism m;
  m.kind = MechanismKind::kVariableRect;
  m.image_shape = shape;
  m.dim = shape.pixels();
  return m;
}

MaskMechanism MaskMechanism::quadrant(ImageShape shape) {
  if (shape.pixels() == 0) throw std::invalid_argument("quadrant mechanism: empty image shape");
  if (shape.height % 2 != 0 || shape.width % 2 != 0)
    throw std::invalid_argument("quadrant mechanism: height and width must be even");
  MaskMechanism m;
  m.kind = MechanismKind::kQuadrant;
  m.image_shape = shape;
  m.dim = shape.pixels();
  return m;
}

namespace {

Mask rect_mask(const ImageShape& shape, std::size_t top, std::size_t left, std::size_t h,
               std::size_t w) {
  Mask m;
  m.bits.assign(shape.pixels(), 0);
  for (std::size_t r = top; r < top + h; ++r)
    for (std::size_t c = left; c < left + w; ++c) m.bits[r * shape.width + c] = 1;
  return m;
}

// Integer side-length range for the variable rectangle: [ceil(0.25 L), floor(0.75 L)].
std::pair<std::size_t, std::size_t> side_range(std::size_t len) {
  const std::size_t lo = (len + 3) / 4;
  const std::size_t hi = (3 * len) / 4;
  return {lo, hi < lo ? lo : hi};
}

}  // namespace

Mask sample_mask(const MaskMechanism& mechanism, CounterRng& rng) {
  const ImageShape& shape = mechanism.image_shape;
  switch (mechanism.kind) {
    case MechanismKind::kSquare: {
      const std::size_t k = mechanism.square_k;
      const std::size_t top = rng.uniform_index(shape.height - k + 1);
      const std::size_t left = rng.uniform_index(shape.width - k + 1);
      return rect_mask(shape, top, left, k, k);
    }
    case MechanismKind::kDropout: {
      Mask m;
      m.bits.resize(mechanism.dim);
      for (std::size_t i = 0; i < mechanism.dim; ++i)
        m.bits[i] = rng.uniform() < mechanism.dropout_rate ? 0 : 1;
      return m;
    }
    case MechanismKind::kVariableRect: {
      const auto [h_lo, h_hi] = side_range(shape.height);
      const auto [w_lo, w_hi] = side_range(shape.width);
      const std::size_t w = w_lo + rng.uniform_index(w_hi - w_lo + 1);
      const std::size_t h = h_lo + rng.uniform_index(h_hi - h_lo + 1);
      const std::size_t top = rng.uniform_index(shape.height - h + 1);
      const std::size_t left = rng.uniform_index(shape.width - w + 1);
      return rect_mask(shape, top, left, h, w);
    }
    case MechanismKind::kQuadrant: {
      const std::size_t q = rng.uniform_index(4);
      const std::size_t h = shape.height / 2;
      const std::size_t w = shape.width / 2;
      return rect_mask(shape, (q / 2) * h, (q % 2) * w, h, w);
    }
  }
  throw std::logic_error("sample_mask: unknown mechanism kind");
}

std::vector<double> apply_mask(const std::vector<double>& x, const Mask& m, double tau) {
  if (x.size() != m.bits.size())
    throw std::invalid_argument("apply_mask: value/mask length mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = m.bits[i] ? x[i] : tau;
  return out;
}

}  // namespace misgan
