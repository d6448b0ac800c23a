#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "frobenius/geometry.hpp"
#include "frobenius/prolongation.hpp"
#include "frobenius/tolerances.hpp"

namespace frob {

/// Coefficients Γ − sign·★, i.e. D_X Y = ∇_X Y − sign·X★Y.
ConnectionField d_connection(const ProductField& field, int sign);

/// g-dual connection: Γ*^k_il = g^{kj}(∂_i g_jl − Γ^a_ij g_al).
ConnectionField dual_connection(const Chart& chart, const ConnectionField& conn);

/// Pointwise max |∂_i g_jl − Γ^a_ij g_al − Γ*^a_il g_ja|.
double duality_residual(const Chart& chart, const ConnectionField& conn, const ConnectionField& dual);

double torsion(const ConnectionField& conn);

/// Finite-difference curvature endomorphisms op(a, b, i, j) per node; valid
/// where the central stencil exists.
TensorField connection_curvature(const ConnectionField& conn);

struct SkewHessianReport {
  bool passed = false;
  double torsion_d = 0.0;
  double torsion_dual = 0.0;
  /// max |R^D − 2R^g| and the bound it was held to.
  double twice_curvature = 0.0;
  double twice_curvature_tolerance = 0.0;
  /// Smallest per-node max |R^D| over interior nodes.
  double min_curvature = 0.0;
  std::size_t worst_node = 0;
};

/// Builds D = ∇ + ★ and checks the skew-Hessian axioms.
SkewHessianReport check_skew_hessian(const ProductField& field, const Tolerances& tols = {});

/// μ = +1 field on a κ > 0 chart: P = √κ(N_i g_jk + N_j g_ik + N_k g_ij − N_i N_j N_k)
/// with N the g-unit gradient of minus the spherical height seen from `center`.
/// `center` must lie away from the grid (it is a critical point of the height).
ProductField radial_skew_field(const Chart& chart, const Grid& grid, const Point& center);

struct AffineChart {
  Grid grid;
  std::size_t base = 0;
  /// jacobian[node](a, j) = θ^a_j = ∂y^a/∂x^j for the D-parallel coframe.
  std::vector<Mat> jacobian;
  std::vector<Vec> coords;
  /// Max difference between the default and reversed staircase orders.
  double path_disagreement = 0.0;
  /// |Γ^k_ij − (J⁻¹)^k_c ∂_i J^c_j| per node.
  ResidualField pullback;
};

struct AffineOptions {
  std::vector<int> axis_order;
  /// Skip the flatness precondition (used to study non-flat inputs).
  bool require_flat = true;
  /// RK4 substeps per grid interval; nodal coefficients are interpolated.
  int substeps = 4;
};

/// Parallel transport of the coordinate coframe plus line integration,
/// along staircase paths from the central node. Throws PreconditionError for
/// a non-flat connection and IntegrabilityError when the two staircase
/// orders disagree by more than tol::affine_path_disagreement.
AffineChart build_affine_chart(const Chart& chart, const ConnectionField& conn, const Tolerances& tols = {},
                               const AffineOptions& options = {});

enum class PotentialRole { hessian_potential, frobenius_potential };

struct PotentialField {
  Grid grid;
  std::vector<double> phi;
  PotentialRole role = PotentialRole::hessian_potential;

  TensorField as_tensor_field() const;
};

/// Per-node max |∂_c G_ab − ∂_b G_ac| with G = J^{-T} g J^{-1} the metric in
/// affine coordinates.
ResidualField closedness_residual(const Chart& chart, const AffineChart& affine);

/// φ with Ddφ = g, gauge φ(base) = 0 and dφ(base) = 0. Throws NotHessianError
/// when the closedness residual exceeds its tolerance.
PotentialField solve_hessian_potential(const Chart& chart, const ConnectionField& conn, const AffineChart& affine,
                                       const Tolerances& tols = {});

/// Adds the D-affine function c0 + c_a y^a.
PotentialField gauge_shift(const PotentialField& phi, const AffineChart& affine, double c0, const Vec& c);

struct ConsistencyReport {
  /// P_ijk + ∇³_ijk φ + κ(2 g_ij ∇_kφ + g_ik ∇_jφ + g_jk ∇_iφ), with ∇³_ijk = ∇_k∇_j∇_i.
  ResidualField consistency;
  /// Same with ∇³ symmetrized and the source 4κ g_(ij ∇_k)φ.
  ResidualField consistency_symmetrized;
  /// Ddφ − g.
  ResidualField hessian;
  /// D³φ − 2P.
  ResidualField d3;
  /// D³φ − P (diagnostic: non-zero when P ≠ 0).
  ResidualField d3_unit_factor;
};

/// With D = ∇ − ★ the pair (φ, ψ = −φ) is the candidate Hesse-Frobenius
/// potential pair; the residuals here are evaluated with nested central
/// differences.
ConsistencyReport verify_hesse_frobenius_consistency(const ProductField& field, const PotentialField& phi);

struct GaugeSweep {
  double consistency = 0.0;
  double hessian = 0.0;
  /// Largest change of the consistency residual relative to the unshifted potential.
  double consistency_shift = 0.0;
  int shifts = 0;
};

/// Strong form: reruns the consistency checks on `count` random D-affine shifts.
GaugeSweep strong_gauge_sweep(const ProductField& field, const PotentialField& phi, const AffineChart& affine,
                              int count, std::uint64_t rng_seed);

/// (∇_k★_ij^l − ★_ij^a ★_ak^l − κ(…)) dφ_l, max-norm per node.
ResidualField check_weak_condition(const ProductField& field, const TensorField& dphi);

/// |∇³(ψ+φ) + ∇_k★_ij^a ∇_aφ − ★_ij^b ★_bk^a ∇_aφ + κ(2 g_ij ∇_kψ + g_ik ∇_jψ + g_jk ∇_iψ)|.
ResidualField difference_of_potentials_residual(const ProductField& field, const PotentialField& phi,
                                                const PotentialField& psi);

/// Central-difference gradient of a potential (rank-1 lower field).
TensorField potential_differential(const PotentialField& phi);

}  // namespace frob
