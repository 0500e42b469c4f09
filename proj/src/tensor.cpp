#include "srx/tensor.hpp"

#include <cmath>

#include "srx/common.hpp"

namespace srx {

Tensor::Tensor(std::vector<int64_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (numel() != static_cast<int64_t>(data.size())) {
    throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str());
  }
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  int64_t n = t.numel();
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& x : t.data) x = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  int64_t n = static_cast<int64_t>(values.size());
  return Tensor({1, n}, std::move(values));
}

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("tensor: negative dimension in " + shape_str());
    n *= d;
  }
  return n;
}

int64_t Tensor::rows() const {
  if (ndim() != 2) throw ShapeError("tensor: rows() on non-2d shape " + shape_str());
  return shape[0];
}

int64_t Tensor::cols() const {
  if (ndim() != 2) throw ShapeError("tensor: cols() on non-2d shape " + shape_str());
  return shape[1];
}

double& Tensor::at(int64_t i, int64_t j) {
  return data[static_cast<size_t>(i * cols() + j)];
}

double Tensor::at(int64_t i, int64_t j) const {
  return data[static_cast<size_t>(i * cols() + j)];
}

bool Tensor::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return srx::shape_str(shape); }

std::string shape_str(const std::vector<int64_t>& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

}  // namespace srx
