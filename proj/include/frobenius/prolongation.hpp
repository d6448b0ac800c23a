#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "frobenius/algebra.hpp"
#include "frobenius/geometry.hpp"
#include "frobenius/grid.hpp"

namespace frob {

/// Grid-sampled product ★ over a chart. star[node](i, j, k) = ★_ij^k.
struct ProductField {
  Chart chart;
  Grid grid;
  std::size_t base = 0;
  std::vector<Tensor> star;

  ProductAtPoint at(std::size_t node) const;
  TensorField as_tensor_field() const;
  /// Lowered cubic form P_ijk per node.
  TensorField lowered_field() const;
};

ProductField zero_field(const Chart& chart, const Grid& grid);

struct PathSpec {
  std::vector<Point> waypoints;
  /// RK4 steps per straight segment; 0 means derive from max_step.
  int steps_per_segment = 0;
  std::optional<double> max_step;
};

/// Right-hand side of the prolongation system in coordinates:
/// result(i, j, l, k) = ∂_k ★_ij^l.
Tensor hmf_rhs(const Chart& chart, const Point& x, const ProductAtPoint& star);

/// Covariant right-hand side: result(i, j, l, k) = ★_ij^a ★_ak^l + κ(2 g_ij δ_k^l + g_ik δ_j^l + g_jk δ_i^l).
Tensor hmf_covariant_rhs(const Chart& chart, const MetricAtPoint& metric, const Tensor& star);

/// Classical RK4 along the polyline. Throws SingularityError (carrying the
/// arc length reached) once any component exceeds tol::blow_up.
ProductAtPoint integrate_path(const Chart& chart, const ProductAtPoint& seed, const PathSpec& path);

struct ConstructOptions {
  /// Staircase order of the sweep; empty means 0, 1, ..., n-1.
  std::vector<int> axis_order;
  double max_step = tol::default_rk_step;
  /// Reject seeds that fail validate_seed at the base node.
  bool require_valid_seed = true;
};

/// Integrates from the grid's central node to every node along
/// axis-ordered staircase paths.
ProductField construct_field(const Chart& chart, const ProductAtPoint& seed, const Grid& grid,
                             const ConstructOptions& options = {});

/// Per-node max |a − b| between two fields on the same grid.
ResidualField field_difference(const ProductField& a, const ProductField& b);

struct HmfReport {
  /// Finite-difference ∇★ against the covariant right-hand side.
  ResidualField hmf;
  /// [★(e_i), ★(e_j)] + R(e_i, e_j), pointwise.
  ResidualField curvature;
  /// ∇_k ★_ij^l − ∇_i ★_kj^l.
  ResidualField symmetry;
  ResidualField commutativity;
  ResidualField compatibility;
};

HmfReport verify_hmf_field(const ProductField& field);

/// Lowered form of the prolongation residual evaluated on a sampled cubic
/// form P: max over components of |∇_k P_ijl − P_ij^a P_akl − κ(2 g_ij g_kl + g_ik g_jl + g_jk g_il)|.
ResidualField hmf_lowered_residual(const Chart& chart, const TensorField& lowered);

/// Ricci-identity obstruction for the prolongation system at one point.
double integrability_residual(const Chart& chart, const Point& x, const ProductAtPoint& star);

struct FieldSignature {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double residual_max = 0.0;
  double associator_max = 0.0;
  bool indeterminate = false;
  /// Node count that entered the summary.
  std::size_t nodes = 0;
};

/// estimate_mu on every node (interior only when interior_only is set).
/// Throws NotCurvedFrobeniusError at the first failing node.
FieldSignature summarize_signature(const ProductField& field, bool interior_only = true);

}  // namespace frob
