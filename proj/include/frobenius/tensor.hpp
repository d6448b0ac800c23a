#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace frob {

enum class Slot : std::uint8_t { lower, upper };

/// Dense component array of a tensor at a point, row-major in its slots.
///
/// Every slot ranges over 0..dim-1. The slot pattern records which indices
/// are contravariant so that covariant differentiation can attach the right
/// connection terms. Derivative slots are always appended last, so
/// (∇T)(i, j, ..., k) stores ∇_k T_ij... .
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, std::vector<Slot> slots);

  static Tensor scalar(double value);
  /// ★-shaped storage: star(i, j, k) = ★_ij^k.
  static Tensor product(int dim) { return Tensor(dim, {Slot::lower, Slot::lower, Slot::upper}); }
  static Tensor lowered3(int dim) { return Tensor(dim, {Slot::lower, Slot::lower, Slot::lower}); }

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return static_cast<int>(slots_.size()); }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  template <class... I>
  double& operator()(I... idx) {
    return data_[offset_of(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    return data_[offset_of(idx...)];
  }

  std::size_t offset(std::span<const int> idx) const;
  /// Inverse of offset(): fills idx (length rank()).
  void unravel(std::size_t flat, std::span<int> idx) const;

  double max_abs() const;
  bool same_shape(const Tensor& other) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

 private:
  template <class... I>
  std::size_t offset_of(I... idx) const {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int dim_ = 0;
  std::vector<Slot> slots_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace frob
