#include "latentmos/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "latentmos/error.hpp"

namespace lmos {

namespace {
std::int64_t count_elems(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}
}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(count_elems(shape_)), 0.0);
}

Tensor Tensor::scalar(double v) {
  Tensor t{std::vector<int>{}};
  t.data_[0] = v;
  return t;
}

Tensor Tensor::vector(std::vector<double> v) {
  Tensor t;
  t.shape_ = {static_cast<int>(v.size())};
  t.data_ = std::move(v);
  return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) {
  if (static_cast<std::int64_t>(v.size()) != static_cast<std::int64_t>(rows) * cols)
    throw DimensionError("matrix(" + std::to_string(rows) + "," + std::to_string(cols) +
                         ") given " + std::to_string(v.size()) + " values");
  Tensor t;
  t.shape_ = {rows, cols};
  t.data_ = std::move(v);
  return t;
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor{std::move(shape)}; }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t{std::move(shape)};
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = v;
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t{std::vector<int>{n, n}};
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

int Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on rank-" + std::to_string(rank()) + " tensor");
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on rank-" + std::to_string(rank()) + " tensor");
  return shape_[1];
}

double& Tensor::at(int r, int c) {
  return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const {
  return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(c)];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string Tensor::shape_str() const { return lmos::shape_str(shape_); }

}  // namespace lmos
