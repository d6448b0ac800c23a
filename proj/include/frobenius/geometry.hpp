#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "frobenius/grid.hpp"
#include "frobenius/tensor.hpp"

namespace frob {

using Mat = Eigen::MatrixXd;

/// Constant-curvature chart g = δ / (1 + κ|x|²/4)² on the coordinate ball
/// |x| ≤ domain_radius. Sphere (stereographic) for κ > 0, Poincaré ball for
/// κ < 0, Euclidean for κ = 0.
class Chart {
 public:
  Chart(int n, double kappa, double domain_radius);

  int n() const noexcept { return n_; }
  double kappa() const noexcept { return kappa_; }
  double domain_radius() const noexcept { return radius_; }

  bool flat() const noexcept;
  bool contains(const Point& x) const;
  /// Throws DomainError unless x has the chart dimension and lies in the ball.
  void require(const Point& x) const;
  /// Throws DomainError unless every node of the grid lies in the ball.
  void require(const Grid& grid) const;

  /// λ(x) = 1 / (1 + κ|x|²/4), so g = λ² δ.
  double conformal_factor(const Point& x) const;
  double scalar_curvature() const noexcept { return n_ * (n_ - 1) * kappa_; }

 private:
  int n_;
  double kappa_;
  double radius_;
};

struct MetricAtPoint {
  Mat g;
  Mat g_inv;
};

MetricAtPoint metric_at(const Chart& chart, const Point& x);

/// gamma(k, i, j) = Γ^k_ij with ∇_{e_i} e_j = Γ^k_ij e_k.
Tensor christoffel_at(const Chart& chart, const Point& x);

/// dg(i, j, k) = ∂_k g_ij.
Tensor metric_derivative_at(const Chart& chart, const Point& x);

/// Curvature endomorphisms: op(a, b, i, j) = (R(e_i, e_j) e_b)^a with
/// R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y].
struct Curvature {
  Tensor op;

  /// R_ijkl = g(R(e_i,e_j) e_l, e_k); equals κ(g_ik g_jl − g_il g_jk) on a
  /// chart of constant curvature κ.
  Tensor lowered(const Mat& g) const;
};

Curvature riemann_at(const Chart& chart, const Point& x);

/// Curvature of a connection from its coefficients and their partials,
/// dgamma(a, j, b, i) = ∂_i Γ^a_jb.
Curvature curvature_from_connection(const Tensor& gamma, const Tensor& dgamma);

/// Connection coefficients sampled on grid nodes, gamma(k, i, j) = Γ^k_ij.
struct ConnectionField {
  Grid grid;
  std::vector<Tensor> gamma;
};

ConnectionField levi_civita_field(const Chart& chart, const Grid& grid);
/// Samples a pointwise tensor-valued function on every node.
TensorField sample_field(const Grid& grid, const std::function<Tensor(const Point&)>& f);
TensorField metric_field(const Chart& chart, const Grid& grid);

/// Central-difference partials: result(..., k) = ∂_k field(...). Valid where
/// all 2n neighbours are valid.
TensorField partial_derivative_field(const TensorField& field);

/// Covariant derivative of a sampled tensor field; the derivative slot is
/// appended last. Throws StencilError at nodes without a full stencil.
Tensor covariant_derivative_at(const TensorField& field, const ConnectionField& conn, std::size_t node);
TensorField covariant_derivative_field(const TensorField& field, const ConnectionField& conn);
/// Levi-Civita version of the above.
Tensor covariant_derivative_at(const Chart& chart, const TensorField& field, std::size_t node);
TensorField covariant_derivative_field(const Chart& chart, const TensorField& field);

/// Applies ∇ (or any connection) to a point value given its partials.
Tensor covariant_from_partials(const Tensor& value, const Tensor& partials, const Tensor& gamma);

/// Second partials of a scalar field by the standard 3-point / 4-point
/// cross stencils: result(i, j) = ∂_i ∂_j f.
TensorField second_partials_field(const TensorField& scalar);

}  // namespace frob
