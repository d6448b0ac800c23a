#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "frobenius/tensor.hpp"

namespace frob {

using Point = Eigen::VectorXd;

/// Uniform tensor-product grid over the box [lo, hi] (per axis).
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<int> counts, std::vector<double> lo, std::vector<double> hi);
  /// Cube [-half_width, half_width]^n with `count` nodes per axis.
  static Grid cube(int n, int count, double half_width);

  int dim() const noexcept { return static_cast<int>(counts_.size()); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<int>& counts() const noexcept { return counts_; }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }

  double spacing(int axis) const;
  double max_spacing() const;

  std::vector<int> multi_index(std::size_t node) const;
  std::size_t flat_index(std::span<const int> idx) const;
  Point point(std::size_t node) const;
  /// Index of the neighbour one step along `axis` (direction ±1), or -1.
  std::ptrdiff_t neighbour(std::size_t node, int axis, int direction) const;

  /// Base node used by staircase constructions: the central node.
  std::vector<int> center() const;
  std::size_t center_node() const;

  bool operator==(const Grid& other) const = default;

 private:
  std::vector<int> counts_;
  std::vector<double> lo_, hi_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Per-node tensor samples over a grid plus a validity mask. Derived fields
/// (finite differences) are valid only where the full stencil was valid.
struct TensorField {
  Grid grid;
  std::vector<Tensor> values;
  std::vector<std::uint8_t> valid;

  TensorField() = default;
  TensorField(Grid g, const Tensor& prototype);

  std::size_t size() const noexcept { return values.size(); }
  bool is_valid(std::size_t node) const { return valid[node] != 0; }
  std::size_t valid_count() const;
};

/// Scalar diagnostic per node (e.g. a residual max-norm).
struct ResidualField {
  Grid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  ResidualField() = default;
  explicit ResidualField(Grid g);

  double max() const;
  /// Node of the largest valid value (or size() if none).
  std::size_t argmax() const;
  std::vector<std::size_t> exceeding(double tol) const;
  std::size_t valid_count() const;
};

/// Ratio max(coarse) / max(fine) over the nodes valid on the coarse grid,
/// where `fine` refines `coarse` by a factor of two per axis (2m−1 nodes).
double convergence_ratio(const ResidualField& coarse, const ResidualField& fine);

/// True when `fine` has 2m−1 nodes per axis over the same box as `coarse`.
bool is_refinement(const Grid& coarse, const Grid& fine);

}  // namespace frob
