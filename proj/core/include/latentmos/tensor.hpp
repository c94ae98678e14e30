#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lmos {

/// Dense row-major float64 array of rank 0 (scalar), 1 (vector) or 2 (matrix).
/// All model state, gradients and oracle computations use this one carrier.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(int rows, int cols, std::vector<double> v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor identity(int n);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool is_scalar() const { return numel() == 1; }

  // Rank-2 accessors; throw DimensionError on other ranks.
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  double max_abs() const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// "(3x4)" style description used in error messages.
std::string shape_str(const std::vector<int>& shape);

}  // namespace lmos
