#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srx {

// Dense row-major tensor of 64-bit floats. Zero-sized axes are legal so that
// empty token sequences flow through the graph as (0, d) values.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int64_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);  // shape {1, n}

  int64_t numel() const;
  int ndim() const { return static_cast<int>(shape.size()); }

  // 2-d accessors; tensors with other ranks must not use them.
  int64_t rows() const;
  int64_t cols() const;
  double& at(int64_t i, int64_t j);
  double at(int64_t i, int64_t j) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  std::string shape_str() const;
};

std::string shape_str(const std::vector<int64_t>& shape);

}  // namespace srx
