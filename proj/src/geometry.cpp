#include "frobenius/geometry.hpp"

#include <cmath>
#include <sstream>

#include "frobenius/error.hpp"
#include "frobenius/parallel.hpp"
#include "frobenius/tolerances.hpp"

namespace frob {

namespace {

// σ_k = ∂_k log λ for g = e^{2σ} δ.
Eigen::VectorXd log_factor_gradient(const Chart& chart, const Point& x) {
  double lam = chart.conformal_factor(x);
  return -(chart.kappa() / 2.0) * lam * x;
}

}  // namespace

Chart::Chart(int n, double kappa, double domain_radius) : n_(n), kappa_(kappa), radius_(domain_radius) {
  if (n < 2) throw InputError("chart: dimension must be at least 2");
  if (!(domain_radius > 0.0) || !std::isfinite(domain_radius)) throw InputError("chart: domain_radius must be positive");
  if (!std::isfinite(kappa)) throw InputError("chart: kappa must be finite");
  if (kappa != 0.0 && !(domain_radius < 2.0 / std::sqrt(std::abs(kappa)))) {
    std::ostringstream msg;
    msg << "chart: domain_radius " << domain_radius << " must be below 2/sqrt(|kappa|) = "
        << 2.0 / std::sqrt(std::abs(kappa));
    throw InputError(msg.str());
  }
}

bool Chart::flat() const noexcept { return std::abs(kappa_) <= tol::flat_kappa; }

bool Chart::contains(const Point& x) const {
  return x.size() == n_ && x.norm() <= radius_ * (1.0 + 1e-12);
}

void Chart::require(const Point& x) const {
  if (x.size() != n_) throw DimensionError("point dimension does not match chart");
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "point with |x| = " << x.norm() << " outside chart domain radius " << radius_;
    throw DomainError(msg.str());
  }
}

void Chart::require(const Grid& grid) const {
  if (grid.dim() != n_) throw DimensionError("grid dimension does not match chart");
  double r2 = 0.0;
  for (int a = 0; a < n_; ++a) {
    auto ua = static_cast<std::size_t>(a);
    double m = std::max(std::abs(grid.lo()[ua]), std::abs(grid.hi()[ua]));
    r2 += m * m;
  }
  if (std::sqrt(r2) > radius_ * (1.0 + 1e-12)) throw DomainError("grid box is not contained in the chart domain");
}

double Chart::conformal_factor(const Point& x) const { return 1.0 / (1.0 + kappa_ * x.squaredNorm() / 4.0); }

MetricAtPoint metric_at(const Chart& chart, const Point& x) {
  chart.require(x);
  double lam = chart.conformal_factor(x);
  int n = chart.n();
  MetricAtPoint m;
  m.g = Mat::Identity(n, n) * (lam * lam);
  m.g_inv = Mat::Identity(n, n) / (lam * lam);
  return m;
}

Tensor christoffel_at(const Chart& chart, const Point& x) {
  chart.require(x);
  int n = chart.n();
  Eigen::VectorXd s = log_factor_gradient(chart, x);
  Tensor gamma(n, {Slot::upper, Slot::lower, Slot::lower});
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (k == i) v += s(j);
        if (k == j) v += s(i);
        if (i == j) v -= s(k);
        gamma(k, i, j) = v;
      }
  return gamma;
}

Tensor metric_derivative_at(const Chart& chart, const Point& x) {
  auto m = metric_at(chart, x);
  Eigen::VectorXd s = log_factor_gradient(chart, x);
  int n = chart.n();
  Tensor dg(n, {Slot::lower, Slot::lower, Slot::lower});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) dg(i, i, k) = 2.0 * s(k) * m.g(i, i);
  return dg;
}

Tensor Curvature::lowered(const Mat& g) const {
  int n = op.dim();
  Tensor r(n, {Slot::lower, Slot::lower, Slot::lower, Slot::lower});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int a = 0; a < n; ++a) v += g(k, a) * op(a, l, i, j);
          r(i, j, k, l) = v;
        }
  return r;
}

Curvature riemann_at(const Chart& chart, const Point& x) {
  auto m = metric_at(chart, x);
  int n = chart.n();
  double kappa = chart.kappa();
  Curvature c{Tensor(n, {Slot::upper, Slot::lower, Slot::lower, Slot::lower})};
  // R(X,Y)Z = κ (g(Y,Z) X − g(X,Z) Y)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          if (a == i) v += m.g(j, b);
          if (a == j) v -= m.g(i, b);
          c.op(a, b, i, j) = kappa * v;
        }
  return c;
}

Curvature curvature_from_connection(const Tensor& gamma, const Tensor& dgamma) {
  int n = gamma.dim();
  Curvature c{Tensor(n, {Slot::upper, Slot::lower, Slot::lower, Slot::lower})};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = dgamma(a, j, b, i) - dgamma(a, i, b, j);
          for (int q = 0; q < n; ++q) v += gamma(a, i, q) * gamma(q, j, b) - gamma(a, j, q) * gamma(q, i, b);
          c.op(a, b, i, j) = v;
        }
  return c;
}

TensorField sample_field(const Grid& grid, const std::function<Tensor(const Point&)>& f) {
  TensorField out;
  out.grid = grid;
  out.values.resize(grid.size());
  out.valid.assign(grid.size(), 1);
  parallel_for(grid.size(), [&](std::size_t node) { out.values[node] = f(grid.point(node)); });
  return out;
}

ConnectionField levi_civita_field(const Chart& chart, const Grid& grid) {
  chart.require(grid);
  ConnectionField conn{grid, std::vector<Tensor>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t node) { conn.gamma[node] = christoffel_at(chart, grid.point(node)); });
  return conn;
}

TensorField metric_field(const Chart& chart, const Grid& grid) {
  chart.require(grid);
  return sample_field(grid, [&](const Point& x) {
    auto m = metric_at(chart, x);
    int n = chart.n();
    Tensor g(n, {Slot::lower, Slot::lower});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = m.g(i, j);
    return g;
  });
}

namespace {

bool has_stencil(const TensorField& field, std::size_t node) {
  if (!field.valid[node]) return false;
  for (int a = 0; a < field.grid.dim(); ++a)
    for (int d : {-1, 1}) {
      auto nb = field.grid.neighbour(node, a, d);
      if (nb < 0 || !field.valid[static_cast<std::size_t>(nb)]) return false;
    }
  return true;
}

Tensor partials_at(const TensorField& field, std::size_t node) {
  const Tensor& v = field.values[node];
  int n = field.grid.dim();
  std::vector<Slot> slots = v.slots();
  slots.push_back(Slot::lower);
  Tensor d(n, std::move(slots));
  std::size_t m = v.size();
  for (int k = 0; k < n; ++k) {
    const Tensor& fp = field.values[static_cast<std::size_t>(field.grid.neighbour(node, k, +1))];
    const Tensor& fm = field.values[static_cast<std::size_t>(field.grid.neighbour(node, k, -1))];
    double inv = 1.0 / (2.0 * field.grid.spacing(k));
    for (std::size_t c = 0; c < m; ++c) d[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = (fp[c] - fm[c]) * inv;
  }
  return d;
}

Tensor derived_prototype(const TensorField& field) {
  const Tensor& v = field.values.front();
  std::vector<Slot> slots = v.slots();
  slots.push_back(Slot::lower);
  return Tensor(field.grid.dim(), std::move(slots));
}

}  // namespace

TensorField partial_derivative_field(const TensorField& field) {
  TensorField out(field.grid, derived_prototype(field));
  parallel_for(field.size(), [&](std::size_t node) {
    if (has_stencil(field, node)) {
      out.values[node] = partials_at(field, node);
    } else {
      out.valid[node] = 0;
    }
  });
  return out;
}

Tensor covariant_from_partials(const Tensor& value, const Tensor& partials, const Tensor& gamma) {
  int n = value.dim();
  int r = value.rank();
  Tensor out = partials;
  std::vector<int> idx(static_cast<std::size_t>(r + 1));
  std::vector<int> probe(static_cast<std::size_t>(r));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unravel(flat, idx);
    int m = idx[static_cast<std::size_t>(r)];
    double acc = 0.0;
    for (int p = 0; p < r; ++p) {
      auto up = static_cast<std::size_t>(p);
      std::copy(idx.begin(), idx.begin() + r, probe.begin());
      for (int c = 0; c < n; ++c) {
        probe[up] = c;
        double t = value[value.offset(probe)];
        if (value.slots()[up] == Slot::upper) {
          acc += gamma(idx[up], m, c) * t;
        } else {
          acc -= gamma(c, m, idx[up]) * t;
        }
      }
    }
    out[flat] += acc;
  }
  return out;
}

Tensor covariant_derivative_at(const TensorField& field, const ConnectionField& conn, std::size_t node) {
  if (!(field.grid == conn.grid)) throw InputError("covariant derivative: field and connection grids differ");
  if (!has_stencil(field, node)) throw StencilError("covariant derivative: node " + std::to_string(node) + " lacks a full central-difference stencil");
  return covariant_from_partials(field.values[node], partials_at(field, node), conn.gamma[node]);
}

TensorField covariant_derivative_field(const TensorField& field, const ConnectionField& conn) {
  if (!(field.grid == conn.grid)) throw InputError("covariant derivative: field and connection grids differ");
  TensorField out(field.grid, derived_prototype(field));
  parallel_for(field.size(), [&](std::size_t node) {
    if (has_stencil(field, node)) {
      out.values[node] = covariant_from_partials(field.values[node], partials_at(field, node), conn.gamma[node]);
    } else {
      out.valid[node] = 0;
    }
  });
  return out;
}

Tensor covariant_derivative_at(const Chart& chart, const TensorField& field, std::size_t node) {
  if (!has_stencil(field, node)) throw StencilError("covariant derivative: node " + std::to_string(node) + " lacks a full central-difference stencil");
  return covariant_from_partials(field.values[node], partials_at(field, node), christoffel_at(chart, field.grid.point(node)));
}

TensorField covariant_derivative_field(const Chart& chart, const TensorField& field) {
  return covariant_derivative_field(field, levi_civita_field(chart, field.grid));
}

TensorField second_partials_field(const TensorField& scalar) {
  const Grid& grid = scalar.grid;
  int n = grid.dim();
  TensorField out(grid, Tensor(n, {Slot::lower, Slot::lower}));
  auto value = [&](std::ptrdiff_t node) { return scalar.values[static_cast<std::size_t>(node)][0]; };
  auto ok = [&](std::ptrdiff_t node) { return node >= 0 && scalar.valid[static_cast<std::size_t>(node)]; };
  parallel_for(grid.size(), [&](std::size_t node) {
    Tensor& h = out.values[node];
    if (!scalar.valid[node]) {
      out.valid[node] = 0;
      return;
    }
    auto self = static_cast<std::ptrdiff_t>(node);
    for (int i = 0; i < n; ++i) {
      auto ip = grid.neighbour(node, i, +1), im = grid.neighbour(node, i, -1);
      if (!ok(ip) || !ok(im)) {
        out.valid[node] = 0;
        return;
      }
      double hi = grid.spacing(i);
      h(i, i) = (value(ip) - 2.0 * value(self) + value(im)) / (hi * hi);
      for (int j = i + 1; j < n; ++j) {
        std::ptrdiff_t corner[4];
        int c = 0;
        bool good = true;
        for (int si : {+1, -1}) {
          auto base = grid.neighbour(node, i, si);
          for (int sj : {+1, -1}) {
            std::ptrdiff_t nb = base < 0 ? -1 : grid.neighbour(static_cast<std::size_t>(base), j, sj);
            good = good && ok(nb);
            corner[c++] = nb;
          }
        }
        if (!good) {
          out.valid[node] = 0;
          return;
        }
        double v = (value(corner[0]) - value(corner[1]) - value(corner[2]) + value(corner[3])) / (4.0 * hi * grid.spacing(j));
        h(i, j) = v;
        h(j, i) = v;
      }
    }
  });
  return out;
}

}  // namespace frob
