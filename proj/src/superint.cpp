#include "frobenius/superint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "frobenius/error.hpp"
#include "frobenius/parallel.hpp"

namespace frob {

namespace {

Tensor sym3(const Tensor& a) {
  int n = a.dim();
  Tensor s = Tensor::lowered3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        s(i, j, k) = (a(i, j, k) + a(i, k, j) + a(j, i, k) + a(j, k, i) + a(k, i, j) + a(k, j, i)) / 6.0;
  return s;
}

double asymmetry(const Tensor& p) {
  int n = p.dim();
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) r = std::max({r, std::abs(p(i, j, k) - p(j, i, k)), std::abs(p(i, j, k) - p(i, k, j))});
  return r;
}

// Raises the last slot of a lowered rank-3 tensor.
Tensor raise_last(const Tensor& low, const Mat& g_inv) {
  int n = low.dim();
  Tensor up = Tensor::product(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int a = 0; a < n; ++a) v += low(i, j, a) * g_inv(a, k);
        up(i, j, k) = v;
      }
  return up;
}

}  // namespace

Tensor p_from_t_tensor(const Tensor& T, const Tensor& t, const MetricAtPoint& metric) {
  int n = T.dim();
  if (t.dim() != n || metric.g.rows() != n) throw DimensionError("p_from_t_tensor: dimension mismatch");
  if (n < 2) throw InputError("p_from_t_tensor: n must be at least 2");
  Tensor p = Tensor::lowered3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int c = 0; c < n; ++c) v += metric.g(k, c) * T(i, j, c);
        p(i, j, k) = (v + metric.g(i, j) * t(k) / (n - 1)) / 3.0;
      }
  return p;
}

StructuralPoint T_from_P(const Tensor& P, const MetricAtPoint& metric) {
  int n = P.dim();
  if (n < 2) throw InputError("T_from_P: n must be at least 2");
  if (metric.g.rows() != n) throw DimensionError("T_from_P: metric dimension mismatch");
  if (asymmetry(P) > tol::symmetric_input * std::max(1.0, P.max_abs()))
    throw InputError("T_from_P: P is not totally symmetric");
  const Mat& g = metric.g;
  const Mat& gi = metric.g_inv;
  StructuralPoint out;
  Tensor p(n, {Slot::lower});
  for (int k = 0; k < n; ++k) {
    double v = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v += gi(i, j) * P(i, j, k);
    p(k) = v;
  }
  out.t = Tensor(n, {Slot::lower});
  out.t_bar = Tensor(n, {Slot::lower});
  for (int k = 0; k < n; ++k) {
    out.t(k) = 3.0 * (n - 1) / n * p(k);
    out.t_bar(k) = static_cast<double>(n) / ((n - 1) * (n + 2)) * out.t(k);
  }
  Tensor low = Tensor::lowered3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) low(i, j, k) = 3.0 * P(i, j, k) - g(i, j) * out.t(k) / (n - 1);
  out.T = raise_last(low, gi);
  out.tracefree = tracefree_sym_projector(low, metric);
  return out;
}

Tensor tracefree_sym_projector(const Tensor& A, const MetricAtPoint& metric) {
  int n = A.dim();
  const Mat& g = metric.g;
  const Mat& gi = metric.g_inv;
  Tensor s = sym3(A);
  Vec p = Vec::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p(k) += gi(i, j) * s(i, j, k);
  // The trace of Sym(g ⊗ p) is (n+2)/3 p.
  Tensor out = s;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out(i, j, k) -= (g(i, j) * p(k) + g(i, k) * p(j) + g(j, k) * p(i)) / (n + 2);
  return out;
}

double check_sis_alg(const Tensor& P, const MetricAtPoint& metric, double kappa) {
  int n = P.dim();
  const Mat& g = metric.g;
  const Mat& gi = metric.g_inv;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double q = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) q += gi(a, b) * (P(i, j, a) * P(k, l, b) - P(i, k, a) * P(j, l, b));
          worst = std::max(worst, std::abs(q + kappa * (g(i, j) * g(k, l) - g(i, k) * g(j, l))));
        }
  return worst;
}

void structural_fields(const Chart& chart, const TensorField& lowered, StructuralTensor& T, TraceForm& t) {
  const Grid& grid = lowered.grid;
  T.grid = t.grid = grid;
  T.T.assign(grid.size(), Tensor());
  T.tracefree.assign(grid.size(), Tensor());
  t.t.assign(grid.size(), Tensor());
  t.t_bar.assign(grid.size(), Tensor());
  parallel_for(grid.size(), [&](std::size_t v) {
    // Integrated fields are symmetric only up to the integration error.
    StructuralPoint s = T_from_P(sym3(lowered.values[v]), metric_at(chart, grid.point(v)));
    T.T[v] = std::move(s.T);
    T.tracefree[v] = std::move(s.tracefree);
    t.t[v] = std::move(s.t);
    t.t_bar[v] = std::move(s.t_bar);
  });
}

SisDiffReport check_sis_diff(const Chart& chart, const StructuralTensor& T, const TraceForm& t) {
  int n = chart.n();
  if (n < 3) throw UnsupportedError("check_sis_diff: the structural equations are stated for n >= 3");
  const Grid& grid = T.grid;
  if (!(grid == t.grid)) throw InputError("check_sis_diff: grids differ");
  TensorField tf(grid, Tensor::lowered3(n));
  tf.values = T.tracefree;
  TensorField tb(grid, Tensor(n, {Slot::lower}));
  tb.values = t.t_bar;
  TensorField dT = covariant_derivative_field(chart, tf);
  TensorField dt = covariant_derivative_field(chart, tb);
  double R = chart.scalar_curvature();

  SisDiffReport rep{ResidualField(grid), ResidualField(grid)};
  std::vector<Tensor> bracket(grid.size());
  parallel_for(grid.size(), [&](std::size_t v) {
    if (!dT.valid[v] || !dt.valid[v]) return;
    MetricAtPoint m = metric_at(chart, grid.point(v));
    const Mat& g = m.g;
    const Mat& gi = m.g_inv;
    const Tensor& S = T.tracefree[v];
    const Tensor& b = t.t_bar[v];
    Tensor Su = raise_last(S, gi);  // T̊_ij^a
    Vec bu = gi * Eigen::Map<const Vec>(b.data().data(), n);
    // Q_ij = T̊_i^{ab} T̊_jab, Y_ij = T̊_ij^a t̄_a.
    Mat Q = Mat::Zero(n, n), Y = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double q = 0.0, y = 0.0;
        for (int a = 0; a < n; ++a) {
          y += Su(i, j, a) * b(a);
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) q += S(i, a, c) * gi(a, d) * Su(j, d, c);
        }
        Q(i, j) = q;
        Y(i, j) = y;
      }
    double ds = 0.0;
    Tensor brk(n, {Slot::lower, Slot::lower, Slot::lower, Slot::lower});
    for (int l = 0; l < n; ++l) {
      Tensor B = Tensor::lowered3(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double v1 = 0.0;
            for (int a = 0; a < n; ++a) v1 += Su(i, j, a) * S(k, l, a);
            B(i, j, k) = v1 + S(i, j, k) * b(l) + 3.0 * S(i, j, l) * b(k) +
                         (4.0 / (n - 2) * Q(i, j) - 3.0 * Y(i, j)) * g(k, l);
          }
      Tensor PB = tracefree_sym_projector(B, m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            brk(i, j, k, l) = PB(i, j, k);
            ds = std::max(ds, std::abs(dT.values[v](i, j, k, l) - rep.printed_coefficient * PB(i, j, k)));
          }
    }
    bracket[v] = std::move(brk);
    rep.ds.values[v] = ds;
    rep.ds.valid[v] = 1;

    // |T̊|² = T̊^{abc} T̊_abc
    double tsq = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b2 = 0; b2 < n; ++b2)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d)
            for (int e = 0; e < n; ++e) tsq += S(a, b2, c) * gi(a, d) * gi(b2, e) * Su(d, e, c);
    double bsq = bu.dot(Eigen::Map<const Vec>(b.data().data(), n));
    Mat M(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) M(k, l) = (-2.0 / (n - 2) * Q(k, l) + 3.0 * Y(k, l) + 4.0 * b(k) * b(l)) / 3.0;
    double trM = (gi.array() * M.array()).sum();
    double scalar = (3.0 * n + 2.0) / (6.0 * (n + 2) * (n - 1)) * tsq - (n - 2) / 6.0 * bsq + 3.0 / (2.0 * (n - 1)) * R;
    double dtr = 0.0;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double rhs = M(k, l) - trM / n * g(k, l) + g(k, l) / n * scalar;
        dtr = std::max(dtr, std::abs(dt.values[v](k, l) - rhs));
      }
    rep.dt.values[v] = dtr;
    rep.dt.valid[v] = 1;
  });

  double num = 0.0, den = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!rep.ds.valid[v]) continue;
    for (std::size_t c = 0; c < bracket[v].size(); ++c) {
      num += dT.values[v][c] * bracket[v][c];
      den += bracket[v][c] * bracket[v][c];
    }
  }
  rep.fitted_coefficient = den > 0.0 ? num / den : 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!rep.ds.valid[v]) continue;
    for (std::size_t c = 0; c < bracket[v].size(); ++c)
      rep.ds_fitted_residual =
          std::max(rep.ds_fitted_residual, std::abs(dT.values[v][c] - rep.fitted_coefficient * bracket[v][c]));
  }
  return rep;
}

ResidualField check_better_form(const Chart& chart, const TensorField& lowered) {
  const Grid& grid = lowered.grid;
  int n = chart.n();
  double kappa = chart.kappa();
  TensorField dC = covariant_derivative_field(chart, lowered);
  ResidualField r(grid);
  parallel_for(grid.size(), [&](std::size_t v) {
    if (!dC.valid[v]) return;
    MetricAtPoint m = metric_at(chart, grid.point(v));
    const Tensor& C = lowered.values[v];
    Tensor Cu = raise_last(C, m.g_inv);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double quad = 0.0;
            for (int b = 0; b < n; ++b) quad += Cu(i, j, b) * C(b, k, l);
            double src = 2.0 * m.g(i, j) * m.g(k, l) + m.g(i, k) * m.g(j, l) + m.g(j, k) * m.g(i, l);
            worst = std::max(worst, std::abs(dC.values[v](i, j, k, l) - quad - kappa * src));
          }
    r.values[v] = worst;
    r.valid[v] = 1;
  });
  return r;
}

ResidualField verify_potential_pde(const Chart& chart, PotentialV& V, const StructuralTensor& T) {
  const Grid& grid = V.grid;
  if (!(grid == T.grid)) throw InputError("verify_potential_pde: grids differ");
  int n = chart.n();
  TensorField f(grid, Tensor::scalar(0.0));
  for (std::size_t v = 0; v < grid.size(); ++v) f.values[v] = Tensor::scalar(V.V[v]);
  TensorField dV = partial_derivative_field(f);
  TensorField hV = second_partials_field(f);
  V.laplacian.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  ResidualField r(grid);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!dV.valid[v] || !hV.valid[v]) continue;
    Point x = grid.point(v);
    MetricAtPoint m = metric_at(chart, x);
    Tensor gam = christoffel_at(chart, x);
    Mat H(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double h = hV.values[v](i, j);
        for (int k = 0; k < n; ++k) h -= gam(k, i, j) * dV.values[v](k);
        H(i, j) = h;
      }
    double lap = (m.g_inv.array() * H.array()).sum();
    V.laplacian[v] = lap;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double rhs = m.g(i, j) * lap / n;
        for (int k = 0; k < n; ++k) rhs += T.T[v](i, j, k) * dV.values[v](k);
        worst = std::max(worst, std::abs(H(i, j) - rhs));
      }
    r.values[v] = worst;
    r.valid[v] = 1;
  }
  return r;
}

bool BridgeReport::passed() const {
  for (const CheckEntry& c : checks)
    if (!c.diagnostic && !c.passed) return false;
  return classification_error.empty();
}

Signature field_signature(const ProductField& field, FieldSignature* summary) {
  FieldSignature s = summarize_signature(field);
  if (summary) *summary = s;
  Signature sig;
  sig.residual = s.residual_max;
  if (s.indeterminate) {
    sig.indeterminate = true;
    return sig;
  }
  auto eps = [](double mu) { return std::abs(mu) <= tol::mu_zero ? 0 : (mu > 0.0 ? 1 : -1); };
  if (eps(s.mu_min) != eps(s.mu_max))
    throw ClassificationError("field signature changes sign across the grid (mu in [" + std::to_string(s.mu_min) +
                              ", " + std::to_string(s.mu_max) + "])");
  sig.mu = 0.5 * (s.mu_min + s.mu_max);
  sig.epsilon = eps(*sig.mu);
  return sig;
}

Label classify_field(const ProductField& field) {
  FieldSignature s;
  Signature sig = field_signature(field, &s);
  return classify(sig, field.chart.flat(), s.associator_max);
}

BridgeReport bridge_report(const ProductField& field, const Tolerances& tols) {
  const Chart& chart = field.chart;
  const Grid& grid = field.grid;
  int n = chart.n();
  double h = grid.max_spacing();
  BridgeReport rep;
  auto add = [&](std::string name, double residual, double tolerance, bool diagnostic = false, std::string note = {}) {
    rep.checks.push_back({std::move(name), residual, tolerance, residual <= tolerance, diagnostic, std::move(note)});
  };

  TensorField P = field.lowered_field();
  double alg = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v)
    alg = std::max(alg, check_sis_alg(P.values[v], metric_at(chart, grid.point(v)), chart.kappa()));
  add("sis_alg", alg, tols.fd("sis_alg", h) + 1e-10);
  add("better_form", check_better_form(chart, P).max(), tols.fd("better_form", h));

  StructuralTensor T;
  TraceForm t;
  structural_fields(chart, P, T, t);
  double trace = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    Mat gi = metric_at(chart, grid.point(v)).g_inv;
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += gi(i, j) * T.T[v](i, j, k);
      trace = std::max(trace, std::abs(s));
    }
  }
  add("structural_trace_free", trace, 1e-10);

  if (n >= 3) {
    SisDiffReport sd = check_sis_diff(chart, T, t);
    double limit = 10.0 * tols.fd("sis_diff", h);
    rep.fitted_ds_coefficient = sd.fitted_coefficient;
    rep.sis_diff_discrepancy = sd.ds.max() > limit || sd.dt.max() > limit;
    add("sis_diff_ds", sd.ds.max(), limit, true,
        "printed coefficient 1/13; least-squares coefficient " + std::to_string(sd.fitted_coefficient));
    add("sis_diff_ds_fitted", sd.ds_fitted_residual, limit, true, "DS residual with the least-squares coefficient");
    add("sis_diff_dt", sd.dt.max(), limit, true);
  }

  // Hessian side only when D = ∇ − ★ is flat.
  ConnectionField d = d_connection(field, 1);
  TensorField rd = connection_curvature(d);
  double flat = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v)
    if (rd.valid[v]) flat = std::max(flat, rd.values[v].max_abs());
  double flat_tol = tols.fd("connection_flatness", h);
  if (flat <= flat_tol) {
    try {
      AffineChart affine = build_affine_chart(chart, d, tols);
      PotentialField phi = solve_hessian_potential(chart, d, affine, tols);
      ConsistencyReport c = verify_hesse_frobenius_consistency(field, phi);
      rep.hessian_side = true;
      add("connection_flatness", flat, flat_tol);
      add("hessian_potential", c.hessian.max(), tols.fd("hessian_potential", h));
      add("d3_potential", c.d3.max(), tols.fd("d3_potential", h), false, "D^3 phi = 2P");
      add("d3_potential_unit_factor", c.d3_unit_factor.max(), tols.fd("d3_potential", h), true, "D^3 phi = P");
      add("hesse_frobenius_consistency", c.consistency.max(), tols.fd("hesse_frobenius_consistency", h));
    } catch (const Error& e) {
      add("hessian_side", std::numeric_limits<double>::infinity(), 0.0, false, e.what());
    }
  } else {
    add("connection_flatness", flat, flat_tol, true, "D is not flat; Hessian side skipped");
  }

  try {
    rep.label = to_string(classify_field(field));
  } catch (const Error& e) {
    rep.classification_error = e.what();
  }
  return rep;
}

}  // namespace frob
