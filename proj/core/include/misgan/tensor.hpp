#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace misgan {

/// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything
/// this project needs; shape is kept generic anyway.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool all_finite() const;
  std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

}  // namespace misgan
