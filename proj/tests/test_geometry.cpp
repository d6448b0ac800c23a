#include <cmath>

#include "doctest.h"
#include "frobenius/error.hpp"
#include "frobenius/geometry.hpp"

using namespace frob;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) p(i++) = x;
  return p;
}

// Christoffels from central differences of the metric itself.
Tensor fd_christoffel(const Chart& c, const Point& x, double h) {
  int n = c.n();
  std::vector<Mat> dg(n);
  for (int k = 0; k < n; ++k) {
    Point xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    dg[k] = (metric_at(c, xp).g - metric_at(c, xm).g) / (2 * h);
  }
  Mat gi = metric_at(c, x).g_inv;
  Tensor gam(n, {Slot::upper, Slot::lower, Slot::lower});
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0;
        for (int l = 0; l < n; ++l) v += 0.5 * gi(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
        gam(k, i, j) = v;
      }
  return gam;
}

}  // namespace

TEST_CASE("chart rejects invalid parameters") {
  CHECK_THROWS_AS(Chart(1, 1.0, 0.5), InputError);
  CHECK_THROWS_AS(Chart(3, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(Chart(3, 1.0, 2.5), InputError);
  CHECK_THROWS_AS(Chart(3, -1.0, 2.5), InputError);
  CHECK_NOTHROW(Chart(3, 0.0, 100.0));
  Chart c(3, 1.0, 0.5);
  CHECK_THROWS_AS(metric_at(c, pt({0.6, 0, 0})), DomainError);
  CHECK_THROWS_AS(metric_at(c, pt({0.1, 0})), DimensionError);
}

TEST_CASE("metric at origin is identity and conformal away from it") {
  Chart c(3, 0.7, 1.0);
  auto m = metric_at(c, pt({0, 0, 0}));
  CHECK((m.g - Mat::Identity(3, 3)).norm() == doctest::Approx(0.0));
  Point x = pt({0.3, -0.2, 0.1});
  auto mx = metric_at(c, x);
  double lam = 1.0 / (1.0 + 0.7 * x.squaredNorm() / 4.0);
  CHECK((mx.g - lam * lam * Mat::Identity(3, 3)).norm() < 1e-15);
  CHECK((mx.g * mx.g_inv - Mat::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("christoffel symbols match differentiated metric") {
  for (double kappa : {1.0, -0.8, 0.0}) {
    Chart c(3, kappa, 0.9);
    Point x = pt({0.2, -0.35, 0.4});
    Tensor exact = christoffel_at(c, x);
    Tensor fd = fd_christoffel(c, x, 1e-4);
    CHECK(max_abs_diff(exact, fd) < 1e-8);
  }
}

TEST_CASE("metric derivative matches finite differences") {
  Chart c(2, -1.3, 1.0);
  Point x = pt({0.25, 0.4});
  Tensor dg = metric_derivative_at(c, x);
  double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Point xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    Mat d = (metric_at(c, xp).g - metric_at(c, xm).g) / (2 * h);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::abs(dg(i, j, k) - d(i, j)) < 1e-9);
  }
}

TEST_CASE("riemann tensor has constant-curvature form and agrees with connection route") {
  for (double kappa : {1.0, -0.6}) {
    Chart c(3, kappa, 0.9);
    Point x = pt({0.15, 0.3, -0.25});
    Mat g = metric_at(c, x).g;
    Tensor rl = riemann_at(c, x).lowered(g);
    double worst = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            worst = std::max(worst, std::abs(rl(i, j, k, l) - kappa * (g(i, k) * g(j, l) - g(i, l) * g(j, k))));
    CHECK(worst < 1e-13);

    double h = 1e-4;
    Tensor dgam(3, {Slot::upper, Slot::lower, Slot::lower, Slot::lower});
    for (int i = 0; i < 3; ++i) {
      Point xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      Tensor gp = christoffel_at(c, xp), gm = christoffel_at(c, xm);
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 3; ++j)
          for (int b = 0; b < 3; ++b) dgam(a, j, b, i) = (gp(a, j, b) - gm(a, j, b)) / (2 * h);
    }
    Curvature fd = curvature_from_connection(christoffel_at(c, x), dgam);
    CHECK(max_abs_diff(fd.op, riemann_at(c, x).op) < 1e-7);
  }
}

TEST_CASE("levi-civita covariant derivative of the metric vanishes") {
  Chart c(2, 1.0, 1.0);
  Grid grid = Grid::cube(2, 9, 0.5);
  TensorField g = metric_field(c, grid);
  TensorField dg = covariant_derivative_field(c, g);
  double worst = 0;
  for (std::size_t v = 0; v < grid.size(); ++v)
    if (dg.is_valid(v)) worst = std::max(worst, dg.values[v].max_abs());
  CHECK(dg.valid_count() == 49);
  CHECK(worst < 5e-3);
  CHECK_THROWS_AS(covariant_derivative_at(c, g, 0), StencilError);
}

TEST_CASE("grid requirement checks the box corners") {
  Chart c(2, 1.0, 0.5);
  CHECK_NOTHROW(c.require(Grid::cube(2, 5, 0.35)));
  CHECK_THROWS_AS(c.require(Grid::cube(2, 5, 0.4)), DomainError);
}

TEST_CASE("metric example point and first bianchi identity") {
  Chart c(2, 1.0, 2.0 - 1e-9);
  auto m = metric_at(c, pt({2.0 - 2e-9, 0}));
  CHECK(m.g(0, 0) == doctest::Approx(0.25).epsilon(1e-6));
  for (int n : {2, 3, 4}) {
    Chart d(n, -1.0, 1.0);
    Point x = Point::Constant(n, 0.2);
    Tensor r = riemann_at(d, x).lowered(metric_at(d, x).g);
    double worst = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) worst = std::max(worst, std::abs(r(i, j, k, l) + r(j, k, i, l) + r(k, i, j, l)));
    CHECK(worst < 1e-15);
  }
}

TEST_CASE("second partials of a quadratic on a flat chart") {
  Grid grid = Grid::cube(2, 7, 0.6);
  TensorField f = sample_field(grid, [](const Point& x) { return Tensor::scalar(x(0) * x(0) + 3 * x(0) * x(1)); });
  TensorField h = second_partials_field(f);
  std::size_t c = grid.center_node();
  REQUIRE(h.is_valid(c));
  CHECK(h.values[c](0, 0) == doctest::Approx(2.0));
  CHECK(h.values[c](0, 1) == doctest::Approx(3.0));
  CHECK(h.values[c](1, 1) == doctest::Approx(0.0));
}
