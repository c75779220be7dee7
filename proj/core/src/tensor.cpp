#include "hpix/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpix/error.hpp"

namespace hpix {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor extent " + shape.str());
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape.numel()) {
    throw ShapeError("value count does not match shape " + shape.str());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Tensor Tensor::sample(int n) const {
  Shape s{1, shape_.c, shape_.h, shape_.w};
  const std::size_t len = s.numel();
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(n * len);
  return Tensor(s, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(len)));
}

Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) throw ShapeError("stack of zero samples");
  const Shape first = samples.front().shape();
  Shape out{0, first.c, first.h, first.w};
  for (const auto& t : samples) {
    const Shape s = t.shape();
    if (s.c != first.c || s.h != first.h || s.w != first.w) {
      throw ShapeError("stack: mismatched sample shape " + s.str());
    }
    out.n += s.n;
  }
  std::vector<double> values;
  values.reserve(out.numel());
  for (const auto& t : samples) {
    values.insert(values.end(), t.values().begin(), t.values().end());
  }
  return Tensor(out, std::move(values));
}

}  // namespace hpix
