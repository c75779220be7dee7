#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hpix {

// NCHW extent. Parameters reuse the same 4-d layout (e.g. conv weights are
// [out, in, k, k], per-channel vectors are [1, C, 1, 1]).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense double-precision NCHW array with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const double* plane(int n, int c) const {
    return data_.data() + offset(n, c, 0, 0);
  }

  double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const {
    return data_[offset(n, c, h, w)];
  }

  void fill(double v);
  bool all_finite() const;
  double max_abs() const;
  double squared_norm() const;

  // Sample `n` as a standalone 1xCxHxW tensor.
  Tensor sample(int n) const;

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }

  Shape shape_;
  std::vector<double> data_;
};

// Concatenates 1xCxHxW samples along the batch axis.
Tensor stack(std::span<const Tensor> samples);

}  // namespace hpix
