#include "misgan/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace misgan {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = v;
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape = {values.size()};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols)
    throw std::invalid_argument("Tensor::matrix: value count does not match shape");
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(values);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape.size() != 2) throw std::logic_error("Tensor::rows: tensor is not rank 2");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) throw std::logic_error("Tensor::cols: tensor is not rank 2");
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

}  // namespace misgan
