#include "frobenius/prolongation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frobenius/error.hpp"
#include "frobenius/parallel.hpp"

namespace frob {

ProductAtPoint ProductField::at(std::size_t node) const {
  return {star[node], metric_at(chart, grid.point(node))};
}

TensorField ProductField::as_tensor_field() const {
  TensorField f(grid, Tensor::product(chart.n()));
  f.values = star;
  return f;
}

TensorField ProductField::lowered_field() const {
  TensorField f(grid, Tensor::lowered3(chart.n()));
  for (std::size_t v = 0; v < grid.size(); ++v) f.values[v] = at(v).lowered();
  return f;
}

ProductField zero_field(const Chart& chart, const Grid& grid) {
  chart.require(grid);
  return {chart, grid, grid.center_node(), std::vector<Tensor>(grid.size(), Tensor::product(chart.n()))};
}

Tensor hmf_covariant_rhs(const Chart& chart, const MetricAtPoint& metric, const Tensor& star) {
  int n = chart.n();
  double kappa = chart.kappa();
  const Mat& g = metric.g;
  Tensor out(n, {Slot::lower, Slot::lower, Slot::upper, Slot::lower});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int a = 0; a < n; ++a) v += star(i, j, a) * star(a, k, l);
          double src = 2.0 * g(i, j) * (k == l) + g(i, k) * (j == l) + g(j, k) * (i == l);
          out(i, j, l, k) = v + kappa * src;
        }
  return out;
}

namespace {

bool exactly_commutative(const Tensor& star) {
  int n = star.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (star(i, j, k) != star(j, i, k)) return false;
  return true;
}

// ∂_k★_ij^l = ∇_k★_ij^l + Γ^a_ki ★_aj^l + Γ^a_kj ★_ia^l − Γ^l_ka ★_ij^a
Tensor coordinate_rhs(const Chart& chart, const Point& x, const Tensor& star) {
  int n = chart.n();
  MetricAtPoint m = metric_at(chart, x);
  Tensor gam = christoffel_at(chart, x);
  Tensor out = hmf_covariant_rhs(chart, m, star);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int a = 0; a < n; ++a)
            v += gam(a, k, i) * star(a, j, l) + gam(a, k, j) * star(i, a, l) - gam(l, k, a) * star(i, j, a);
          out(i, j, l, k) += v;
        }
  if (exactly_commutative(star)) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int k = 0; k < n; ++k) {
            double v = 0.5 * (out(i, j, l, k) + out(j, i, l, k));
            out(i, j, l, k) = v;
            out(j, i, l, k) = v;
          }
  }
  return out;
}

Tensor directional(const Chart& chart, const Point& x, const Tensor& star, const Point& dx) {
  int n = chart.n();
  Tensor d = coordinate_rhs(chart, x, star);
  Tensor out = Tensor::product(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) v += d(i, j, l, k) * dx(k);
        out(i, j, l) = v;
      }
  return out;
}

// RK4 over `steps` equal steps from x0 to x1; arc is advanced as we go.
Tensor integrate_segment(const Chart& chart, const Point& x0, const Point& x1, Tensor star, int steps, double& arc) {
  if (steps <= 0) return star;
  Point dx = (x1 - x0) / steps;
  double ds = dx.norm();
  Point x = x0;
  for (int s = 0; s < steps; ++s) {
    Tensor k1 = directional(chart, x, star, dx);
    Tensor k2 = directional(chart, x + 0.5 * dx, star + 0.5 * k1, dx);
    Tensor k3 = directional(chart, x + 0.5 * dx, star + 0.5 * k2, dx);
    Tensor k4 = directional(chart, x + dx, star + k3, dx);
    for (std::size_t f = 0; f < star.size(); ++f) star[f] += (k1[f] + 2.0 * k2[f] + 2.0 * k3[f] + k4[f]) / 6.0;
    x = x0 + (s + 1) * dx;
    arc += ds;
    double m = star.max_abs();
    if (!(m <= tol::blow_up))
      throw SingularityError("prolongation blew up (|star| = " + std::to_string(m) + ") after arc length " +
                                 std::to_string(arc),
                             arc);
  }
  return star;
}

int steps_for(double length, double max_step) {
  if (length == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(length / max_step - 1e-12)));
}

}  // namespace

Tensor hmf_rhs(const Chart& chart, const Point& x, const ProductAtPoint& star) {
  chart.require(x);
  if (star.dim() != chart.n()) throw DimensionError("hmf_rhs: product dimension does not match chart");
  return coordinate_rhs(chart, x, star.star);
}

ProductAtPoint integrate_path(const Chart& chart, const ProductAtPoint& seed, const PathSpec& path) {
  if (path.waypoints.empty()) throw InputError("integrate_path: path needs at least one waypoint");
  if (seed.dim() != chart.n()) throw DimensionError("integrate_path: seed dimension does not match chart");
  for (const Point& w : path.waypoints) chart.require(w);
  double max_step = path.max_step.value_or(tol::default_rk_step);
  if (path.steps_per_segment <= 0 && !(max_step > 0.0)) throw InputError("integrate_path: max_step must be positive");
  Tensor star = seed.star;
  double arc = 0.0;
  for (std::size_t s = 1; s < path.waypoints.size(); ++s) {
    const Point& a = path.waypoints[s - 1];
    const Point& b = path.waypoints[s];
    double len = (b - a).norm();
    int steps = path.steps_per_segment > 0 ? (len == 0.0 ? 0 : path.steps_per_segment) : steps_for(len, max_step);
    star = integrate_segment(chart, a, b, std::move(star), steps, arc);
  }
  return {star, metric_at(chart, path.waypoints.back())};
}

ProductField construct_field(const Chart& chart, const ProductAtPoint& seed, const Grid& grid,
                             const ConstructOptions& options) {
  int n = chart.n();
  if (grid.dim() != n) throw DimensionError("construct_field: grid dimension does not match chart");
  if (seed.dim() != n) throw DimensionError("construct_field: seed dimension does not match chart");
  if (!(options.max_step > 0.0)) throw InputError("construct_field: max_step must be positive");
  chart.require(grid);

  std::vector<int> order = options.axis_order;
  if (order.empty())
    for (int a = 0; a < n; ++a) order.push_back(a);
  {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int a = 0; a < n; ++a)
      if (static_cast<int>(sorted.size()) != n || sorted[static_cast<std::size_t>(a)] != a)
        throw InputError("construct_field: axis_order must be a permutation of 0..n-1");
  }

  std::size_t base = grid.center_node();
  Point x_base = grid.point(base);
  MetricAtPoint m_base = metric_at(chart, x_base);
  if ((seed.metric.g - m_base.g).cwiseAbs().maxCoeff() > 1e-12)
    throw PreconditionError("construct_field: seed metric is not the metric at the base node");
  if (options.require_valid_seed) {
    SeedValidation v = validate_seed(seed, chart.kappa());
    if (!v.passed)
      throw PreconditionError("construct_field: seed fails validation (associator residual " +
                              std::to_string(v.associator) + ")");
  }

  ProductField field{chart, grid, base, std::vector<Tensor>(grid.size())};
  field.star[base] = seed.star;
  std::vector<int> base_idx = grid.center();

  for (std::size_t stage = 0; stage < order.size(); ++stage) {
    int axis = order[stage];
    // Line starts: nodes already filled, i.e. at base coordinates on every axis not yet swept.
    std::vector<std::size_t> starts;
    for (std::size_t v = 0; v < grid.size(); ++v) {
      auto idx = grid.multi_index(v);
      bool on = true;
      for (std::size_t t = stage; t < order.size(); ++t) {
        auto a = static_cast<std::size_t>(order[t]);
        if (idx[a] != base_idx[a]) on = false;
      }
      if (on) starts.push_back(v);
    }
    int steps = steps_for(grid.spacing(axis), options.max_step);
    parallel_for(starts.size(), [&](std::size_t s) {
      std::size_t origin = starts[s];
      for (int dir : {1, -1}) {
        std::size_t cur = origin;
        Tensor star = field.star[origin];
        double arc = 0.0;
        for (;;) {
          std::ptrdiff_t next = grid.neighbour(cur, axis, dir);
          if (next < 0) break;
          auto nx = static_cast<std::size_t>(next);
          try {
            star = integrate_segment(chart, grid.point(cur), grid.point(nx), std::move(star), steps, arc);
          } catch (const SingularityError& e) {
            throw SingularityError(std::string(e.what()) + " while sweeping towards node " + std::to_string(nx),
                                   e.arc_length());
          }
          field.star[nx] = star;
          cur = nx;
        }
      }
    });
  }
  return field;
}

ResidualField field_difference(const ProductField& a, const ProductField& b) {
  if (!(a.grid == b.grid)) throw InputError("field_difference: grids differ");
  ResidualField r(a.grid);
  for (std::size_t v = 0; v < a.grid.size(); ++v) {
    r.values[v] = max_abs_diff(a.star[v], b.star[v]);
    r.valid[v] = 1;
  }
  return r;
}

HmfReport verify_hmf_field(const ProductField& field) {
  const Chart& chart = field.chart;
  const Grid& grid = field.grid;
  int n = chart.n();
  TensorField tf = field.as_tensor_field();
  TensorField cov = covariant_derivative_field(chart, tf);

  HmfReport rep{ResidualField(grid), ResidualField(grid), ResidualField(grid), ResidualField(grid), ResidualField(grid)};
  parallel_for(grid.size(), [&](std::size_t v) {
    Point x = grid.point(v);
    ProductAtPoint p{field.star[v], metric_at(chart, x)};
    rep.commutativity.values[v] = p.commutativity_residual();
    rep.compatibility.values[v] = p.compatibility_residual();
    rep.commutativity.valid[v] = rep.compatibility.valid[v] = 1;

    Curvature riem = riemann_at(chart, x);
    std::vector<Mat> m;
    for (int i = 0; i < n; ++i) m.push_back(p.endomorphism(i));
    double cr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Mat c = m[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(j)] -
                m[static_cast<std::size_t>(j)] * m[static_cast<std::size_t>(i)];
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) cr = std::max(cr, std::abs(c(a, b) + riem.op(a, b, i, j)));
      }
    rep.curvature.values[v] = cr;
    rep.curvature.valid[v] = 1;

    if (!cov.is_valid(v)) return;
    const Tensor& d = cov.values[v];
    Tensor rhs = hmf_covariant_rhs(chart, p.metric, p.star);
    rep.hmf.values[v] = max_abs_diff(d, rhs);
    rep.hmf.valid[v] = 1;
    double sym = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int k = 0; k < n; ++k) sym = std::max(sym, std::abs(d(i, j, l, k) - d(k, j, l, i)));
    rep.symmetry.values[v] = sym;
    rep.symmetry.valid[v] = 1;
  });
  return rep;
}

ResidualField hmf_lowered_residual(const Chart& chart, const TensorField& lowered) {
  const Grid& grid = lowered.grid;
  int n = chart.n();
  double kappa = chart.kappa();
  TensorField cov = covariant_derivative_field(chart, lowered);
  ResidualField r(grid);
  parallel_for(grid.size(), [&](std::size_t v) {
    if (!cov.is_valid(v)) return;
    MetricAtPoint m = metric_at(chart, grid.point(v));
    const Tensor& p = lowered.values[v];
    const Tensor& d = cov.values[v];
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int k = 0; k < n; ++k) {
            double q = 0.0;
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) q += p(i, j, a) * m.g_inv(a, b) * p(b, k, l);
            double src = 2.0 * m.g(i, j) * m.g(k, l) + m.g(i, k) * m.g(j, l) + m.g(j, k) * m.g(i, l);
            worst = std::max(worst, std::abs(d(i, j, l, k) - q - kappa * src));
          }
    r.values[v] = worst;
    r.valid[v] = 1;
  });
  return r;
}

double integrability_residual(const Chart& chart, const Point& x, const ProductAtPoint& star) {
  int n = chart.n();
  if (star.dim() != n) throw DimensionError("integrability_residual: product dimension does not match chart");
  double kappa = chart.kappa();
  Curvature riem = riemann_at(chart, x);
  const Mat& g = metric_at(chart, x).g;
  const Tensor& s = star.star;
  const Tensor& op = riem.op;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          for (int a = 0; a < n; ++a) {
            double v = 0.0;
            for (int b = 0; b < n; ++b) {
              v += -op(b, i, k, l) * s(b, j, a) - op(b, j, k, l) * s(i, b, a) + s(i, j, b) * op(a, b, k, l);
              for (int c = 0; c < n; ++c) v += s(i, j, c) * (s(c, l, b) * s(b, k, a) - s(c, k, b) * s(b, l, a));
            }
            v += kappa * (g(i, l) * s(j, k, a) + g(j, l) * s(i, k, a) - g(i, k) * s(j, l, a) - g(j, k) * s(i, l, a));
            worst = std::max(worst, std::abs(v));
          }
  return worst;
}

FieldSignature summarize_signature(const ProductField& field, bool interior_only) {
  const Grid& grid = field.grid;
  int n = field.chart.n();
  FieldSignature out;
  bool first = true;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (interior_only) {
      bool interior = true;
      for (int a = 0; a < n && interior; ++a)
        interior = grid.neighbour(v, a, 1) >= 0 && grid.neighbour(v, a, -1) >= 0;
      if (!interior) continue;
    }
    Point x = grid.point(v);
    ProductAtPoint p = field.at(v);
    Signature s;
    try {
      s = estimate_mu(p, riemann_at(field.chart, x));
    } catch (const NotCurvedFrobeniusError& e) {
      throw NotCurvedFrobeniusError(std::string(e.what()) + " (node " + std::to_string(v) + ")");
    }
    out.residual_max = std::max(out.residual_max, s.residual);
    out.associator_max = std::max(out.associator_max, max_associator(p));
    out.indeterminate = out.indeterminate || s.indeterminate;
    double mu = s.mu.value_or(0.0);
    out.mu_min = first ? mu : std::min(out.mu_min, mu);
    out.mu_max = first ? mu : std::max(out.mu_max, mu);
    first = false;
    ++out.nodes;
  }
  return out;
}

}  // namespace frob
