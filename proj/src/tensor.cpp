#include "frobenius/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "frobenius/error.hpp"

namespace frob {

Tensor::Tensor(int dim, std::vector<Slot> slots) : dim_(dim), slots_(std::move(slots)) {
  if (dim < 1) throw DimensionError("tensor dimension must be positive");
  std::size_t count = 1;
  for (std::size_t r = 0; r < slots_.size(); ++r) count *= static_cast<std::size_t>(dim);
  data_.assign(count, 0.0);
}

Tensor Tensor::scalar(double value) {
  Tensor t(1, {});
  t.data_[0] = value;
  return t;
}

std::size_t Tensor::offset(std::span<const int> idx) const {
  std::size_t off = 0;
  for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  return off;
}

void Tensor::unravel(std::size_t flat, std::span<int> idx) const {
  for (int r = rank() - 1; r >= 0; --r) {
    idx[static_cast<std::size_t>(r)] = static_cast<int>(flat % static_cast<std::size_t>(dim_));
    flat /= static_cast<std::size_t>(dim_);
  }
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::same_shape(const Tensor& other) const {
  return dim_ == other.dim_ && slots_ == other.slots_;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (data_.size() != other.data_.size()) throw DimensionError("tensor shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (data_.size() != other.data_.size()) throw DimensionError("tensor shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("tensor shape mismatch in max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace frob
