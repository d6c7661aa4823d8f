// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MUTE_AUTODIFF_TENSOR_H_
#define MUTE_AUTODIFF_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mute::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer.
//
// The gradient buffer is accumulation scratch owned by the tensor: a Tape
// holding a const reference to a parameter adds into it during backward, so
// it is declared mutable. Tensors without a gradient buffer never receive
// gradient.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  // First and second extents; rows() of a vector is its length.
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  std::span<const double> grad() const { return grad_; }
  std::span<double> grad() { return grad_; }
  void zero_grad();
  void accumulate_grad(std::span<const double> delta) const;

  // Bitwise comparison of shape and values; gradients are ignored.
  bool same_values(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
  mutable std::vector<double> grad_;
  bool requires_grad_ = false;
};

}  // namespace mute::ad

#endif  // MUTE_AUTODIFF_TENSOR_H_
