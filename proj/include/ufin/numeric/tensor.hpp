#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ufin {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float64 array with an optional gradient buffer.
///
/// A tensor is "tracked" when it owns a gradient buffer of the same shape.
/// Model parameters are tracked tensors; intermediate values of a forward
/// pass live on a Tape instead.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rank() const { return shape_.size(); }
  // 2-D view helpers. A rank-1 tensor is a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  bool tracked() const { return tracked_; }
  void enable_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }
  void zero_grad();

  // Copy of shape and values without the gradient buffer.
  Tensor detached() const { return Tensor(shape_, values_); }
  Tensor reshaped(Shape shape) const;
  bool same_values(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool tracked_ = false;
};

/// Non-owning handle to a named model parameter.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

}  // namespace ufin
