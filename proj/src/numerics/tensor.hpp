#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sabrec::numerics {

// Dense row-major tensor of 64-bit floats. Checkpoints may store tensors in
// 32-bit form; in memory everything is double.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int64_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor row(std::vector<double> values);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t rank() const { return static_cast<int64_t>(shape.size()); }
  int64_t extent(int64_t axis) const { return shape[static_cast<size_t>(axis)]; }

  double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return data[static_cast<size_t>(i)]; }
  double& at(int64_t i, int64_t j) { return data[static_cast<size_t>(i * shape[1] + j)]; }
  double at(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * shape[1] + j)]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Throws NumericError if any element is NaN or infinite.
  void check_finite(const std::string& context) const;
};

std::string shape_str(const std::vector<int64_t>& shape);
int64_t shape_numel(const std::vector<int64_t>& shape);

}  // namespace sabrec::numerics
