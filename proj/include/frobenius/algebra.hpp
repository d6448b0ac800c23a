#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "frobenius/geometry.hpp"
#include "frobenius/tensor.hpp"
#include "frobenius/tolerances.hpp"

namespace frob {

using Vec = Eigen::VectorXd;

/// Commutative product on the tangent space at one point,
/// star(i, j, k) = ★_ij^k, i.e. e_i ★ e_j = ★_ij^k e_k.
struct ProductAtPoint {
  Tensor star;
  MetricAtPoint metric;

  int dim() const { return star.dim(); }

  static ProductAtPoint zero(const MetricAtPoint& metric);
  /// Raises the last index of a lowered cubic form P_ijk.
  static ProductAtPoint from_lowered(const Tensor& lowered, const MetricAtPoint& metric);

  /// P_ijk = g_ka ★_ij^a.
  Tensor lowered() const;
  /// Matrix of ★(e_i) = e_i ★ (·): entry (a, b) = ★_ib^a.
  Eigen::MatrixXd endomorphism(int i) const;

  double commutativity_residual() const;
  /// Max deviation of P_ijk from total symmetry.
  double compatibility_residual() const;
};

/// Replaces ★ by its (i,j)-symmetrization in place; bitwise commutative afterwards.
void symmetrize_product(Tensor& star);

Vec multiply(const ProductAtPoint& prod, const Vec& u, const Vec& v);
/// (u★v)★w − u★(v★w).
Vec associator(const ProductAtPoint& prod, const Vec& u, const Vec& v, const Vec& w);
/// assoc(i, j, k, a) = Assoc(e_i, e_j, e_k)^a.
Tensor associator_tensor(const ProductAtPoint& prod);
double max_associator(const ProductAtPoint& prod);
/// Max component of [★(e_i), ★(e_j)] over all pairs.
double max_commutator(const ProductAtPoint& prod);

struct Signature {
  int epsilon = 0;
  std::optional<double> mu;
  bool indeterminate = false;
  double residual = 0.0;
};

/// Least-squares fit of μ in [★(e_i), ★(e_j)] = μ R(e_i, e_j). Throws
/// NotCurvedFrobeniusError when the relative residual exceeds `tolerance`.
Signature estimate_mu(const ProductAtPoint& prod, const Curvature& riem, double tolerance = tol::mu_residual);

/// 0 if μ = 0, ★/√|μ| otherwise; unchanged when μ is indeterminate (R = 0).
ProductAtPoint normalize(const ProductAtPoint& prod, const Signature& sig);

struct AssociatorReport {
  /// triple(i, j, k, a) = C(e_i, e_j, e_k)^a with C(X,Y,Z) = 𝖠(X∧Y)(Z) = Assoc(X,Z,Y).
  Tensor triple;
  double skew_residual = 0.0;
  double cyclic_residual = 0.0;
  double lie_triple_residual = 0.0;
  double jordan_residual = 0.0;
  /// Best c with 𝖠 = c·Ψ, Ψ(X∧Y)(Z) = g(X,Z)Y − g(Y,Z)X, and the max
  /// deviation from that multiple.
  double psi_coefficient = 0.0;
  double psi_residual = 0.0;
  /// μ·κ from the supplied curvature (κ read off R(e_0, e_1)).
  double expected_coefficient = 0.0;
};

AssociatorReport check_lie_triple(const ProductAtPoint& prod, const Curvature& riem);

/// Max over pseudo-random x, y of |(x★x)★(x★y) − x★((x★x)★y)|. Requires
/// commuting endomorphisms (PreconditionError otherwise).
double check_jordan_flat(const ProductAtPoint& prod, int samples = 32);

struct SeedValidation {
  bool passed = false;
  double commutativity = 0.0;
  double compatibility = 0.0;
  /// max |Assoc(u,v,w) − κ(g(v,w)u − g(u,v)w)| over basis triples.
  double associator = 0.0;
};

SeedValidation validate_seed(const ProductAtPoint& prod, double kappa, double tolerance = tol::seed);

struct SeedSolverOptions {
  int max_restarts = 100;
  int max_iterations = 60;
  /// Converged seeds to collect before picking the one with the smallest
  /// spectral_bound (the prolongation reaches further from such seeds).
  int candidates = 8;
};

/// Largest real eigenvalue of ★(v) over g-unit v (deterministic sampling
/// plus the basis directions). Along a flat ray the prolonged product
/// blows up at arc length 1/spectral_bound.
double spectral_bound(const ProductAtPoint& prod);

/// Newton iteration (minimum-norm steps, random restarts) for a totally
/// symmetric P with P_ij^a P_akl − P_ik^a P_ajl = −κ(g_ij g_kl − g_ik g_jl).
/// Deterministic in rng_seed. κ = 0 returns the zero product.
/// Fewer than `candidates` successes within the restart budget still return
/// the best one found.
ProductAtPoint solve_seed_algebra(int n, const MetricAtPoint& metric, double kappa, std::uint64_t rng_seed,
                                  const SeedSolverOptions& options = {});

enum class Label { hessian, nonflat_associative, skew_hessian, manin_frobenius };

std::string to_string(Label label);
Label label_from_string(const std::string& name);

/// Three-way classification of a Curved Frobenius structure (plus the flat
/// Manin-Frobenius case). Throws ClassificationError on inconsistent input.
Label classify(const Signature& sig, bool flat, double assoc_residual);

}  // namespace frob
