#include <cmath>
#include <random>

#include "doctest.h"
#include "frobenius/error.hpp"
#include "frobenius/hessian.hpp"

using namespace frob;

namespace {

struct Built {
  ProductField field;
  ConnectionField d;
  AffineChart affine;
  PotentialField phi;
};

Built build(int n, double kappa, int nodes, double half) {
  Chart c(n, kappa, half * std::sqrt(n) * 1.01);
  auto seed = solve_seed_algebra(n, metric_at(c, Point::Zero(n)), kappa, 1);
  ProductField f = construct_field(c, seed, Grid::cube(n, nodes, half));
  ConnectionField d = d_connection(f, 1);
  AffineChart a = build_affine_chart(c, d);
  PotentialField phi = solve_hessian_potential(c, d, a);
  return {f, d, a, phi};
}

double max_valid(const TensorField& t) {
  double w = 0.0;
  for (std::size_t v = 0; v < t.size(); ++v)
    if (t.is_valid(v)) w = std::max(w, t.values[v].max_abs());
  return w;
}

}  // namespace

TEST_CASE("zero field on a flat chart: D is the coordinate connection") {
  Chart c(2, 0.0, 1.0);
  Grid grid = Grid::cube(2, 9, 0.4);
  ProductField f = zero_field(c, grid);
  ConnectionField d = d_connection(f, 1);
  CHECK(torsion(d) == 0.0);
  AffineChart a = build_affine_chart(c, d);
  CHECK(a.path_disagreement < 1e-14);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    CHECK((a.coords[v] - grid.point(v)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((a.jacobian[v] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);
  }
  // Ddφ = δ with the gauge at the origin gives |x|²/2.
  PotentialField phi = solve_hessian_potential(c, d, a);
  for (std::size_t v = 0; v < grid.size(); ++v) CHECK(phi.phi[v] == doctest::Approx(0.5 * grid.point(v).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("levi-civita connection is self-dual") {
  Chart c(3, -1.0, 0.8);
  Grid grid = Grid::cube(3, 5, 0.3);
  ConnectionField lc = levi_civita_field(c, grid);
  ConnectionField dual = dual_connection(c, lc);
  CHECK(duality_residual(c, lc, dual) < 1e-12);
  double w = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v)
    for (std::size_t k = 0; k < lc.gamma[v].size(); ++k) w = std::max(w, std::abs(lc.gamma[v][k] - dual.gamma[v][k]));
  CHECK(w < 1e-12);
}

TEST_CASE("hessian side of a constructed field") {
  for (double kappa : {1.0, -1.0}) {
    CAPTURE(kappa);
    Built b = build(2, kappa, 21, 0.3);
    const Chart& c = b.field.chart;
    double h = b.field.grid.max_spacing();
    Tolerances tols;
    CHECK(max_valid(connection_curvature(b.d)) < tols.fd("connection_flatness", h));
    CHECK(torsion(b.d) < 1e-14);
    CHECK(b.affine.path_disagreement < tol::affine_path_disagreement);
    CHECK(b.affine.pullback.max() < tols.fd("affine_pullback", h));
    CHECK(closedness_residual(c, b.affine).max() < tols.fd("closedness", h));
    CHECK(b.phi.phi[b.affine.base] == 0.0);

    ConsistencyReport r = verify_hesse_frobenius_consistency(b.field, b.phi);
    CHECK(r.hessian.max() < tols.fd("hessian_potential", h));
    CHECK(r.consistency.max() < tols.fd("hesse_frobenius_consistency", h));
    CHECK(r.d3.max() < tols.fd("d3_potential", h));
    CHECK(r.d3_unit_factor.max() > 10.0 * tols.fd("d3_potential", h));

    GaugeSweep sw = strong_gauge_sweep(b.field, b.phi, b.affine, 4, 11);
    CHECK(sw.shifts == 4);
    CHECK(sw.consistency < tols.fd("hesse_frobenius_consistency", h));
    CHECK(sw.hessian < tols.fd("hessian_potential", h));
    CHECK(sw.consistency_shift < tols.fd("hesse_frobenius_consistency", h));

    CHECK(check_weak_condition(b.field, potential_differential(b.phi)).max() < tols.fd("weak_condition", h));
    PotentialField psi = b.phi;
    for (double& x : psi.phi) x = -x;
    CHECK(difference_of_potentials_residual(b.field, b.phi, psi).max() < tols.fd("difference_of_potentials", h));
    // ψ = +φ is not a valid partner.
    CHECK(difference_of_potentials_residual(b.field, b.phi, b.phi).max() > 10.0 * tols.fd("difference_of_potentials", h));
  }
}

TEST_CASE("gauge shift adds an affine function") {
  Built b = build(2, 1.0, 21, 0.3);
  Vec coef(2);
  coef << 0.3, -0.7;
  PotentialField s = gauge_shift(b.phi, b.affine, 1.25, coef);
  for (std::size_t v = 0; v < s.phi.size(); ++v)
    CHECK(s.phi[v] - b.phi.phi[v] == doctest::Approx(1.25 + coef.dot(b.affine.coords[v] - b.affine.coords[b.affine.base])).epsilon(1e-12));
}

TEST_CASE("hessian residuals converge at second order") {
  Built c = build(2, 1.0, 21, 0.3), f = build(2, 1.0, 41, 0.3);
  ConsistencyReport rc = verify_hesse_frobenius_consistency(c.field, c.phi);
  ConsistencyReport rf = verify_hesse_frobenius_consistency(f.field, f.phi);
  CHECK(convergence_ratio(rc.hessian, rf.hessian) >= 3.5);
  CHECK(convergence_ratio(rc.consistency, rf.consistency) >= 3.5);
  CHECK(convergence_ratio(rc.d3, rf.d3) >= 3.5);
  CHECK(convergence_ratio(c.affine.pullback, f.affine.pullback) >= 3.5);
}

TEST_CASE("flatness precondition and the dual connection") {
  Chart c(2, 1.0, 0.45);
  auto seed = solve_seed_algebra(2, metric_at(c, Point::Zero(2)), 1.0, 1);
  ProductField f = construct_field(c, seed, Grid::cube(2, 21, 0.3));
  // ∇ + ★ is the g-dual of D = ∇ − ★, hence flat as well.
  ConnectionField plus = d_connection(f, -1);
  ConnectionField dual = dual_connection(c, d_connection(f, 1));
  double w = 0.0;
  for (std::size_t v = 0; v < f.grid.size(); ++v)
    for (std::size_t k = 0; k < plus.gamma[v].size(); ++k) w = std::max(w, std::abs(plus.gamma[v][k] - dual.gamma[v][k]));
  CHECK(w < 1e-9);
  CHECK(max_valid(connection_curvature(plus)) < Tolerances().fd("connection_flatness", f.grid.max_spacing()));
  ConnectionField lc = levi_civita_field(c, f.grid);
  CHECK_THROWS_AS(build_affine_chart(c, lc), PreconditionError);
  AffineOptions loose;
  loose.require_flat = false;
  CHECK_THROWS_AS(build_affine_chart(c, lc, {}, loose), IntegrabilityError);
}

TEST_CASE("radial field is skew-hessian") {
  for (int n : {2, 3}) {
    CAPTURE(n);
    Chart c(n, 1.0, 1.9);
    Point q = Point::Zero(n);
    q(0) = 1.5;
    Grid grid = Grid::cube(n, n == 2 ? 21 : 11, 0.25);
    ProductField f = radial_skew_field(c, grid, q);
    FieldSignature s = summarize_signature(f);
    CHECK(s.mu_min == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.mu_max == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.associator_max > 1e-3);
    SkewHessianReport r = check_skew_hessian(f);
    CHECK(r.passed);
    CHECK(r.torsion_d < 1e-13);
    CHECK(r.torsion_dual < 1e-13);
    CHECK(r.twice_curvature <= r.twice_curvature_tolerance);
    CHECK(r.min_curvature > 10.0 * r.twice_curvature_tolerance);
  }
}

TEST_CASE("hesse-frobenius field fails the skew-hessian check") {
  Chart c(2, 1.0, 0.45);
  auto seed = solve_seed_algebra(2, metric_at(c, Point::Zero(2)), 1.0, 1);
  ProductField f = construct_field(c, seed, Grid::cube(2, 21, 0.3));
  SkewHessianReport r = check_skew_hessian(f);
  CHECK_FALSE(r.passed);
  CHECK(r.twice_curvature > 10.0 * r.twice_curvature_tolerance);
}

TEST_CASE("radial field preconditions") {
  Chart c(2, -1.0, 0.8);
  CHECK_THROWS_AS(radial_skew_field(c, Grid::cube(2, 5, 0.3), Point::Constant(2, 0.6)), UnsupportedError);
  Chart s(2, 1.0, 1.9);
  CHECK_THROWS_AS(radial_skew_field(s, Grid::cube(2, 5, 0.3), Point::Zero(2)), DomainError);
}

TEST_CASE("zero product on a flat chart is not skew-hessian") {
  Chart c(2, 0.0, 1.0);
  SkewHessianReport r = check_skew_hessian(zero_field(c, Grid::cube(2, 9, 0.4)));
  CHECK_FALSE(r.passed);
  CHECK(r.min_curvature == 0.0);
}
