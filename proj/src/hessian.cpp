#include "frobenius/hessian.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <random>
#include <string>

#include "frobenius/error.hpp"
#include "frobenius/parallel.hpp"

namespace frob {

ConnectionField d_connection(const ProductField& field, int sign) {
  if (sign != 1 && sign != -1) throw InputError("d_connection: sign must be +1 or -1");
  ConnectionField conn = levi_civita_field(field.chart, field.grid);
  int n = field.chart.n();
  for (std::size_t v = 0; v < field.grid.size(); ++v)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) conn.gamma[v](k, i, j) -= sign * field.star[v](i, j, k);
  return conn;
}

ConnectionField dual_connection(const Chart& chart, const ConnectionField& conn) {
  int n = chart.n();
  ConnectionField dual{conn.grid, std::vector<Tensor>(conn.grid.size())};
  parallel_for(conn.grid.size(), [&](std::size_t v) {
    Point x = conn.grid.point(v);
    MetricAtPoint m = metric_at(chart, x);
    Tensor dg = metric_derivative_at(chart, x);
    const Tensor& gam = conn.gamma[v];
    Tensor out(n, {Slot::upper, Slot::lower, Slot::lower});
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) {
            double inner = dg(j, l, i);
            for (int a = 0; a < n; ++a) inner -= gam(a, i, j) * m.g(a, l);
            s += m.g_inv(k, j) * inner;
          }
          out(k, i, l) = s;
        }
    dual.gamma[v] = std::move(out);
  });
  return dual;
}

double duality_residual(const Chart& chart, const ConnectionField& conn, const ConnectionField& dual) {
  int n = chart.n();
  double worst = 0.0;
  for (std::size_t v = 0; v < conn.grid.size(); ++v) {
    Point x = conn.grid.point(v);
    MetricAtPoint m = metric_at(chart, x);
    Tensor dg = metric_derivative_at(chart, x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          double r = dg(j, l, i);
          for (int a = 0; a < n; ++a) r -= conn.gamma[v](a, i, j) * m.g(a, l) + dual.gamma[v](a, i, l) * m.g(j, a);
          worst = std::max(worst, std::abs(r));
        }
  }
  return worst;
}

double torsion(const ConnectionField& conn) {
  double worst = 0.0;
  for (const Tensor& g : conn.gamma) {
    int n = g.dim();
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) worst = std::max(worst, std::abs(g(k, i, j) - g(k, j, i)));
  }
  return worst;
}

TensorField connection_curvature(const ConnectionField& conn) {
  TensorField gam(conn.grid, conn.gamma.empty() ? Tensor() : conn.gamma.front());
  gam.values = conn.gamma;
  TensorField d = partial_derivative_field(gam);
  int n = conn.grid.dim();
  TensorField out(conn.grid, Tensor(n, {Slot::upper, Slot::lower, Slot::lower, Slot::lower}));
  parallel_for(conn.grid.size(), [&](std::size_t v) {
    out.valid[v] = d.valid[v];
    if (!d.valid[v]) return;
    // d(a, j, b, i) = ∂_i Γ^a_jb, the layout curvature_from_connection expects.
    out.values[v] = curvature_from_connection(conn.gamma[v], d.values[v]).op;
  });
  return out;
}

SkewHessianReport check_skew_hessian(const ProductField& field, const Tolerances& tols) {
  const Chart& chart = field.chart;
  ConnectionField d = d_connection(field, -1);
  ConnectionField dual = dual_connection(chart, d);
  TensorField rd = connection_curvature(d);
  SkewHessianReport rep;
  rep.torsion_d = torsion(d);
  rep.torsion_dual = torsion(dual);
  double h = field.grid.max_spacing();
  rep.twice_curvature_tolerance = tols.fd("twice_curvature", h);
  rep.min_curvature = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t v = 0; v < field.grid.size(); ++v) {
    if (!rd.valid[v]) continue;
    any = true;
    Curvature rg = riemann_at(chart, field.grid.point(v));
    double diff = 0.0;
    for (std::size_t c = 0; c < rg.op.size(); ++c) diff = std::max(diff, std::abs(rd.values[v][c] - 2.0 * rg.op[c]));
    if (diff > rep.twice_curvature) {
      rep.twice_curvature = diff;
      rep.worst_node = v;
    }
    rep.min_curvature = std::min(rep.min_curvature, rd.values[v].max_abs());
  }
  if (!any) throw StencilError("check_skew_hessian: grid has no interior nodes");
  double scale = 1.0;
  for (const Tensor& s : field.star) scale = std::max(scale, s.max_abs());
  double exact = 1e-12 * scale;
  rep.passed = rep.torsion_d <= exact && rep.torsion_dual <= exact &&
               rep.twice_curvature <= rep.twice_curvature_tolerance &&
               rep.min_curvature > 10.0 * rep.twice_curvature_tolerance;
  return rep;
}

ProductField radial_skew_field(const Chart& chart, const Grid& grid, const Point& center) {
  double kappa = chart.kappa();
  if (!(kappa > tol::flat_kappa)) throw UnsupportedError("radial_skew_field: needs kappa > 0");
  int n = chart.n();
  if (center.size() != n) throw DimensionError("radial_skew_field: center dimension does not match chart");
  chart.require(grid);
  double rk = std::sqrt(kappa);
  // Embedding X(y) = (4y, 4 − |y|²)/(4 + |y|²) of the stereographic chart.
  auto embed = [n](const Vec& y) {
    double s = y.squaredNorm();
    Vec e(n + 1);
    e.head(n) = 4.0 * y / (4.0 + s);
    e(n) = (4.0 - s) / (4.0 + s);
    return e;
  };
  Vec c = embed(rk * center);
  ProductField field{chart, grid, grid.center_node(), std::vector<Tensor>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t v) {
    Point x = grid.point(v);
    Vec y = rk * x;
    double s = y.squaredNorm();
    double q = (4.0 + s) * (4.0 + s);
    Vec du(n);
    for (int m = 0; m < n; ++m) {
      double d = 0.0;
      for (int a = 0; a < n; ++a) d += ((a == m ? 4.0 * (4.0 + s) : 0.0) - 8.0 * y(a) * y(m)) / q * c(a);
      d += -16.0 * y(m) / q * c(n);
      du(m) = rk * d;
    }
    MetricAtPoint met = metric_at(chart, x);
    double norm = std::sqrt(du.dot(met.g_inv * du));
    if (!(norm > 1e-8)) throw DomainError("radial_skew_field: center's critical point lies on the grid");
    Vec nn = -du / norm;
    Tensor p = Tensor::lowered3(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          p(i, j, k) = rk * (nn(i) * met.g(j, k) + nn(j) * met.g(i, k) + nn(k) * met.g(i, j) - nn(i) * nn(j) * nn(k));
    ProductAtPoint prod = ProductAtPoint::from_lowered(p, met);
    symmetrize_product(prod.star);
    field.star[v] = std::move(prod.star);
  });
  return field;
}

namespace {

struct Line {
  std::vector<std::size_t> nodes;
  std::size_t origin = 0;
};

// Lines swept at each stage of an axis-ordered staircase from `base`.
std::vector<std::vector<Line>> staircase(const Grid& grid, const std::vector<int>& order, std::size_t base) {
  std::vector<int> bidx = grid.multi_index(base);
  std::vector<std::vector<Line>> stages;
  for (std::size_t s = 0; s < order.size(); ++s) {
    int axis = order[s];
    std::vector<Line> lines;
    for (std::size_t v = 0; v < grid.size(); ++v) {
      auto idx = grid.multi_index(v);
      bool start = true;
      for (std::size_t t = s; t < order.size(); ++t) {
        auto a = static_cast<std::size_t>(order[t]);
        if (idx[a] != bidx[a]) start = false;
      }
      if (!start) continue;
      Line line;
      auto ua = static_cast<std::size_t>(axis);
      line.origin = static_cast<std::size_t>(idx[ua]);
      for (int p = 0; p < grid.counts()[ua]; ++p) {
        idx[ua] = p;
        line.nodes.push_back(grid.flat_index(idx));
      }
      lines.push_back(std::move(line));
    }
    stages.push_back(std::move(lines));
  }
  return stages;
}

// Value at fractional position p + t (0 ≤ t ≤ 1) along the line by
// Lagrange interpolation through up to six samples around the interval.
Vec interpolate(const std::vector<Vec>& vals, std::size_t p, double t) {
  auto m = static_cast<std::ptrdiff_t>(vals.size());
  std::ptrdiff_t width = std::min<std::ptrdiff_t>(6, m);
  std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(p) - (width / 2 - 1);
  lo = std::clamp<std::ptrdiff_t>(lo, 0, m - width);
  double x = static_cast<double>(p) + t;
  Vec out = Vec::Zero(vals.front().size());
  for (std::ptrdiff_t i = lo; i < lo + width; ++i) {
    double w = 1.0;
    for (std::ptrdiff_t j = lo; j < lo + width; ++j)
      if (j != i) w *= (x - static_cast<double>(j)) / static_cast<double>(i - j);
    out += w * vals[static_cast<std::size_t>(i)];
  }
  return out;
}

// Integrates state' = rhs(state, data) along every staircase line; data is
// per node and interpolated for the RK4 midpoint stages.
void sweep(const Grid& grid, const std::vector<int>& order, std::size_t base, int substeps, std::vector<Vec>& state,
           const std::function<Vec(int axis, std::size_t node)>& data,
           const std::function<Vec(const Vec& s, const Vec& d, int axis, double dx)>& rhs) {
  auto stages = staircase(grid, order, base);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    int axis = order[s];
    double h = grid.spacing(axis);
    const auto& lines = stages[s];
    parallel_for(lines.size(), [&](std::size_t li) {
      const Line& line = lines[li];
      std::vector<Vec> d;
      for (std::size_t node : line.nodes) d.push_back(data(axis, node));
      for (int dir : {1, -1}) {
        std::size_t p = line.origin;
        for (;;) {
          if (dir > 0 && p + 1 >= line.nodes.size()) break;
          if (dir < 0 && p == 0) break;
          std::size_t q = dir > 0 ? p + 1 : p - 1;
          std::size_t lo = std::min(p, q);
          Vec st = state[line.nodes[p]];
          double dx = dir * h / substeps;
          for (int k = 0; k < substeps; ++k) {
            // Fractions within [lo, lo+1] at the start, middle and end of this substep.
            double f0 = static_cast<double>(k) / substeps, f1 = (k + 0.5) / substeps, f2 = (k + 1.0) / substeps;
            if (dir < 0) {
              f0 = 1.0 - f0;
              f1 = 1.0 - f1;
              f2 = 1.0 - f2;
            }
            Vec d0 = interpolate(d, lo, f0), dm = interpolate(d, lo, f1), d1 = interpolate(d, lo, f2);
            Vec k1 = rhs(st, d0, axis, dx);
            Vec k2 = rhs(st + 0.5 * k1, dm, axis, dx);
            Vec k3 = rhs(st + 0.5 * k2, dm, axis, dx);
            Vec k4 = rhs(st + k3, d1, axis, dx);
            st += (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
          }
          state[line.nodes[q]] = std::move(st);
          p = q;
        }
      }
    });
  }
}

std::vector<int> resolve_order(const std::vector<int>& order, int n) {
  std::vector<int> out = order;
  if (out.empty())
    for (int a = 0; a < n; ++a) out.push_back(a);
  std::vector<int> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  for (int a = 0; a < n; ++a)
    if (static_cast<int>(sorted.size()) != n || sorted[static_cast<std::size_t>(a)] != a)
      throw InputError("axis order must be a permutation of 0..n-1");
  return out;
}

// Coframe and coordinates packed as (θ row-major, y).
std::vector<Vec> integrate_coframe(const Grid& grid, const ConnectionField& conn, const std::vector<int>& order,
                                   std::size_t base, int substeps) {
  int n = grid.dim();
  std::vector<Vec> state(grid.size(), Vec::Zero(n * n + n));
  Vec s0 = Vec::Zero(n * n + n);
  for (int a = 0; a < n; ++a) s0(a * n + a) = 1.0;
  s0.tail(n) = grid.point(base);
  state[base] = s0;
  auto data = [&](int axis, std::size_t node) {
    Vec d(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i * n + j) = conn.gamma[node](i, axis, j);
    return d;
  };
  auto rhs = [n](const Vec& s, const Vec& d, int axis, double dx) {
    Vec out(n * n + n);
    for (int a = 0; a < n; ++a) {
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += s(a * n + i) * d(i * n + j);
        out(a * n + j) = dx * v;
      }
      out(n * n + a) = dx * s(a * n + axis);
    }
    return out;
  };
  sweep(grid, order, base, substeps, state, data, rhs);
  return state;
}

std::vector<Mat> metric_in_affine(const Chart& chart, const AffineChart& affine) {
  std::vector<Mat> out(affine.grid.size());
  parallel_for(affine.grid.size(), [&](std::size_t v) {
    Mat ji = affine.jacobian[v].inverse();
    out[v] = ji.transpose() * metric_at(chart, affine.grid.point(v)).g * ji;
  });
  return out;
}

TensorField scalar_field(const Grid& grid, const std::vector<double>& values) {
  TensorField f(grid, Tensor::scalar(0.0));
  for (std::size_t v = 0; v < grid.size(); ++v) f.values[v] = Tensor::scalar(values[v]);
  return f;
}

}  // namespace

AffineChart build_affine_chart(const Chart& chart, const ConnectionField& conn, const Tolerances& tols,
                               const AffineOptions& options) {
  const Grid& grid = conn.grid;
  int n = grid.dim();
  if (n != chart.n()) throw DimensionError("build_affine_chart: grid dimension does not match chart");
  chart.require(grid);
  double h = grid.max_spacing();
  if (options.require_flat) {
    TensorField r = connection_curvature(conn);
    double worst = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v)
      if (r.valid[v]) worst = std::max(worst, r.values[v].max_abs());
    double limit = tols.fd("connection_flatness", h);
    if (worst > limit)
      throw PreconditionError("build_affine_chart: connection is not flat (max |R^D| = " + std::to_string(worst) +
                              " > " + std::to_string(limit) + ")");
  }
  std::vector<int> order = resolve_order(options.axis_order, n);
  std::vector<int> reversed(order.rbegin(), order.rend());
  std::size_t base = grid.center_node();
  std::vector<Vec> a = integrate_coframe(grid, conn, order, base, options.substeps);
  std::vector<Vec> b = integrate_coframe(grid, conn, reversed, base, options.substeps);

  AffineChart out;
  out.grid = grid;
  out.base = base;
  out.jacobian.resize(grid.size());
  out.coords.resize(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) {
    out.path_disagreement = std::max(out.path_disagreement, (a[v] - b[v]).cwiseAbs().maxCoeff());
    Mat j(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) j(r, c) = a[v](r * n + c);
    out.jacobian[v] = j;
    out.coords[v] = a[v].tail(n);
  }
  if (out.path_disagreement > tol::affine_path_disagreement)
    throw IntegrabilityError("build_affine_chart: staircase orders disagree by " +
                             std::to_string(out.path_disagreement));

  TensorField jf(grid, Tensor(n, {Slot::upper, Slot::lower}));
  for (std::size_t v = 0; v < grid.size(); ++v)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) jf.values[v](r, c) = out.jacobian[v](r, c);
  TensorField dj = partial_derivative_field(jf);
  out.pullback = ResidualField(grid);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!dj.valid[v]) continue;
    Mat ji = out.jacobian[v].inverse();
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double g = 0.0;
          for (int c = 0; c < n; ++c) g += ji(k, c) * dj.values[v](c, j, i);
          worst = std::max(worst, std::abs(g - conn.gamma[v](k, i, j)));
        }
    out.pullback.values[v] = worst;
    out.pullback.valid[v] = 1;
  }
  return out;
}

TensorField PotentialField::as_tensor_field() const { return scalar_field(grid, phi); }

ResidualField closedness_residual(const Chart& chart, const AffineChart& affine) {
  const Grid& grid = affine.grid;
  int n = grid.dim();
  std::vector<Mat> gm = metric_in_affine(chart, affine);
  TensorField gf(grid, Tensor(n, {Slot::lower, Slot::lower}));
  for (std::size_t v = 0; v < grid.size(); ++v)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) gf.values[v](a, b) = gm[v](a, b);
  TensorField d = partial_derivative_field(gf);
  ResidualField r(grid);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!d.valid[v]) continue;
    Mat ji = affine.jacobian[v].inverse();
    // dy(a, b, c) = ∂G_ab/∂y^c = (J⁻¹)^m_c ∂_m G_ab
    std::vector<double> dy(static_cast<std::size_t>(n * n * n), 0.0);
    auto at = [n](int a, int b, int c) { return static_cast<std::size_t>((a * n + b) * n + c); };
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int m = 0; m < n; ++m) dy[at(a, b, c)] += ji(m, c) * d.values[v](a, b, m);
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) worst = std::max(worst, std::abs(dy[at(a, b, c)] - dy[at(a, c, b)]));
    r.values[v] = worst;
    r.valid[v] = 1;
  }
  return r;
}

PotentialField solve_hessian_potential(const Chart& chart, const ConnectionField& conn, const AffineChart& affine,
                                       const Tolerances& tols) {
  const Grid& grid = affine.grid;
  if (!(grid == conn.grid)) throw InputError("solve_hessian_potential: connection and affine chart grids differ");
  int n = grid.dim();
  double h = grid.max_spacing();
  ResidualField closed = closedness_residual(chart, affine);
  double limit = tols.fd("closedness", h);
  if (closed.max() > limit)
    throw NotHessianError("solve_hessian_potential: metric in affine coordinates is not closed (residual " +
                          std::to_string(closed.max()) + " > " + std::to_string(limit) + ")");

  std::vector<Mat> jinv(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) jinv[v] = affine.jacobian[v].inverse();
  // State (w_a = ∂φ/∂y^a, φ).
  std::vector<Vec> state(grid.size(), Vec::Zero(n + 1));
  auto data = [&](int axis, std::size_t node) {
    Mat g = metric_at(chart, grid.point(node)).g;
    Vec d(2 * n);
    for (int a = 0; a < n; ++a) {
      double f = 0.0;
      for (int i = 0; i < n; ++i) f += jinv[node](i, a) * g(i, axis);
      d(a) = f;
      d(n + a) = affine.jacobian[node](a, axis);
    }
    return d;
  };
  auto rhs = [n](const Vec& s, const Vec& d, int, double dx) {
    Vec out(n + 1);
    out.head(n) = dx * d.head(n);
    out(n) = dx * s.head(n).dot(d.tail(n));
    return out;
  };
  std::vector<int> order = resolve_order({}, n);
  sweep(grid, order, affine.base, 4, state, data, rhs);
  PotentialField out{grid, std::vector<double>(grid.size()), PotentialRole::hessian_potential};
  for (std::size_t v = 0; v < grid.size(); ++v) out.phi[v] = state[v](n);
  return out;
}

PotentialField gauge_shift(const PotentialField& phi, const AffineChart& affine, double c0, const Vec& c) {
  if (!(phi.grid == affine.grid)) throw InputError("gauge_shift: grids differ");
  if (c.size() != affine.grid.dim()) throw DimensionError("gauge_shift: coefficient length");
  PotentialField out = phi;
  for (std::size_t v = 0; v < phi.grid.size(); ++v) out.phi[v] += c0 + c.dot(affine.coords[v]);
  return out;
}

TensorField potential_differential(const PotentialField& phi) { return partial_derivative_field(phi.as_tensor_field()); }

namespace {

struct Derivatives {
  TensorField omega;  // ∇φ
  TensorField third;  // ∇³φ, (i, j, k) = ∇_k∇_j∇_i φ
};

Derivatives levi_civita_derivatives(const Chart& chart, const PotentialField& phi) {
  Derivatives d;
  d.omega = potential_differential(phi);
  TensorField second = covariant_derivative_field(chart, d.omega);
  d.third = covariant_derivative_field(chart, second);
  return d;
}

// P_ijk + T_ijk + κ(2 g_ij w_k + g_ik w_j + g_jk w_i)
double consistency_at(const Tensor& p, const Tensor& t3, const Mat& g, const Tensor& w, double kappa, bool symmetrize) {
  int n = p.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double t, src;
        if (symmetrize) {
          t = (t3(i, j, k) + t3(i, k, j) + t3(j, i, k) + t3(j, k, i) + t3(k, i, j) + t3(k, j, i)) / 6.0;
          src = 4.0 / 3.0 * (g(i, j) * w(k) + g(i, k) * w(j) + g(j, k) * w(i));
        } else {
          t = t3(i, j, k);
          src = 2.0 * g(i, j) * w(k) + g(i, k) * w(j) + g(j, k) * w(i);
        }
        worst = std::max(worst, std::abs(p(i, j, k) + t + kappa * src));
      }
  return worst;
}

}  // namespace

ConsistencyReport verify_hesse_frobenius_consistency(const ProductField& field, const PotentialField& phi) {
  const Chart& chart = field.chart;
  const Grid& grid = field.grid;
  if (!(grid == phi.grid)) throw InputError("verify_hesse_frobenius_consistency: grids differ");
  int n = chart.n();
  Derivatives lc = levi_civita_derivatives(chart, phi);
  ConnectionField d = d_connection(field, 1);
  TensorField ddphi = covariant_derivative_field(lc.omega, d);
  TensorField d3 = covariant_derivative_field(ddphi, d);
  TensorField p = field.lowered_field();

  ConsistencyReport rep{ResidualField(grid), ResidualField(grid), ResidualField(grid), ResidualField(grid),
                        ResidualField(grid)};
  parallel_for(grid.size(), [&](std::size_t v) {
    Mat g = metric_at(chart, grid.point(v)).g;
    if (ddphi.valid[v]) {
      double r = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r = std::max(r, std::abs(ddphi.values[v](i, j) - g(i, j)));
      rep.hessian.values[v] = r;
      rep.hessian.valid[v] = 1;
    }
    if (d3.valid[v]) {
      double r2 = 0.0, r1 = 0.0;
      for (std::size_t c = 0; c < p.values[v].size(); ++c) {
        r2 = std::max(r2, std::abs(d3.values[v][c] - 2.0 * p.values[v][c]));
        r1 = std::max(r1, std::abs(d3.values[v][c] - p.values[v][c]));
      }
      rep.d3.values[v] = r2;
      rep.d3_unit_factor.values[v] = r1;
      rep.d3.valid[v] = rep.d3_unit_factor.valid[v] = 1;
    }
    if (lc.third.valid[v]) {
      rep.consistency.values[v] =
          consistency_at(p.values[v], lc.third.values[v], g, lc.omega.values[v], chart.kappa(), false);
      rep.consistency_symmetrized.values[v] =
          consistency_at(p.values[v], lc.third.values[v], g, lc.omega.values[v], chart.kappa(), true);
      rep.consistency.valid[v] = rep.consistency_symmetrized.valid[v] = 1;
    }
  });
  return rep;
}

GaugeSweep strong_gauge_sweep(const ProductField& field, const PotentialField& phi, const AffineChart& affine,
                              int count, std::uint64_t rng_seed) {
  ConsistencyReport ref = verify_hesse_frobenius_consistency(field, phi);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int n = field.chart.n();
  GaugeSweep out;
  for (int s = 0; s < count; ++s) {
    double c0 = normal(rng);
    Vec c(n);
    for (int a = 0; a < n; ++a) c(a) = normal(rng);
    ConsistencyReport r = verify_hesse_frobenius_consistency(field, gauge_shift(phi, affine, c0, c));
    out.consistency = std::max(out.consistency, r.consistency.max());
    out.hessian = std::max(out.hessian, r.hessian.max());
    for (std::size_t v = 0; v < field.grid.size(); ++v)
      if (r.consistency.valid[v])
        out.consistency_shift = std::max(out.consistency_shift, std::abs(r.consistency.values[v] - ref.consistency.values[v]));
    ++out.shifts;
  }
  return out;
}

ResidualField check_weak_condition(const ProductField& field, const TensorField& dphi) {
  const Chart& chart = field.chart;
  const Grid& grid = field.grid;
  if (!(grid == dphi.grid)) throw InputError("check_weak_condition: grids differ");
  int n = chart.n();
  TensorField cov = covariant_derivative_field(chart, field.as_tensor_field());
  ResidualField r(grid);
  parallel_for(grid.size(), [&](std::size_t v) {
    if (!cov.valid[v] || !dphi.valid[v]) return;
    MetricAtPoint m = metric_at(chart, grid.point(v));
    Tensor rhs = hmf_covariant_rhs(chart, m, field.star[v]);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += (cov.values[v](i, j, l, k) - rhs(i, j, l, k)) * dphi.values[v](l);
          worst = std::max(worst, std::abs(s));
        }
    r.values[v] = worst;
    r.valid[v] = 1;
  });
  return r;
}

ResidualField difference_of_potentials_residual(const ProductField& field, const PotentialField& phi,
                                                const PotentialField& psi) {
  const Chart& chart = field.chart;
  const Grid& grid = field.grid;
  if (!(grid == phi.grid) || !(grid == psi.grid)) throw InputError("difference_of_potentials_residual: grids differ");
  int n = chart.n();
  PotentialField sum = phi;
  for (std::size_t v = 0; v < grid.size(); ++v) sum.phi[v] += psi.phi[v];
  Derivatives ds = levi_civita_derivatives(chart, sum);
  TensorField wphi = potential_differential(phi);
  TensorField wpsi = potential_differential(psi);
  TensorField cov = covariant_derivative_field(chart, field.as_tensor_field());
  double kappa = chart.kappa();
  ResidualField r(grid);
  parallel_for(grid.size(), [&](std::size_t v) {
    if (!ds.third.valid[v] || !cov.valid[v]) return;
    Mat g = metric_at(chart, grid.point(v)).g;
    const Tensor& s = field.star[v];
    const Tensor& wf = wphi.values[v];
    const Tensor& wp = wpsi.values[v];
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double rhs = 0.0;
          for (int a = 0; a < n; ++a) {
            double ss = 0.0;
            for (int b = 0; b < n; ++b) ss += s(i, j, b) * s(b, k, a);
            rhs += (-cov.values[v](i, j, a, k) + ss) * wf(a);
          }
          rhs -= kappa * (2.0 * g(i, j) * wp(k) + g(i, k) * wp(j) + g(j, k) * wp(i));
          worst = std::max(worst, std::abs(ds.third.values[v](i, j, k) - rhs));
        }
    r.values[v] = worst;
    r.valid[v] = 1;
  });
  return r;
}

}  // namespace frob
