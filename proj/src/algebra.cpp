#include "frobenius/algebra.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <cmath>
#include <random>
#include <vector>

#include "frobenius/error.hpp"

namespace frob {

ProductAtPoint ProductAtPoint::zero(const MetricAtPoint& metric) {
  return {Tensor::product(static_cast<int>(metric.g.rows())), metric};
}

ProductAtPoint ProductAtPoint::from_lowered(const Tensor& lowered, const MetricAtPoint& metric) {
  int n = lowered.dim();
  ProductAtPoint p{Tensor::product(n), metric};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int a = 0; a < n; ++a) v += lowered(i, j, a) * metric.g_inv(a, k);
        p.star(i, j, k) = v;
      }
  return p;
}

Tensor ProductAtPoint::lowered() const {
  int n = dim();
  Tensor p = Tensor::lowered3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int a = 0; a < n; ++a) v += metric.g(k, a) * star(i, j, a);
        p(i, j, k) = v;
      }
  return p;
}

Eigen::MatrixXd ProductAtPoint::endomorphism(int i) const {
  int n = dim();
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = star(i, b, a);
  return m;
}

double ProductAtPoint::commutativity_residual() const {
  int n = dim();
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k) r = std::max(r, std::abs(star(i, j, k) - star(j, i, k)));
  return r;
}

double ProductAtPoint::compatibility_residual() const {
  Tensor p = lowered();
  int n = dim();
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        r = std::max(r, std::abs(p(i, j, k) - p(i, k, j)));
        r = std::max(r, std::abs(p(i, j, k) - p(j, i, k)));
      }
  return r;
}

void symmetrize_product(Tensor& star) {
  int n = star.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.5 * (star(i, j, k) + star(j, i, k));
        star(i, j, k) = v;
        star(j, i, k) = v;
      }
}

namespace {

void require_length(const ProductAtPoint& prod, const Vec& v) {
  if (v.size() != prod.dim()) throw DimensionError("vector length does not match product dimension");
}

}  // namespace

Vec multiply(const ProductAtPoint& prod, const Vec& u, const Vec& v) {
  require_length(prod, u);
  require_length(prod, v);
  int n = prod.dim();
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double c = u(i) * v(j);
      if (c == 0.0) continue;
      for (int k = 0; k < n; ++k) out(k) += prod.star(i, j, k) * c;
    }
  return out;
}

Vec associator(const ProductAtPoint& prod, const Vec& u, const Vec& v, const Vec& w) {
  return multiply(prod, multiply(prod, u, v), w) - multiply(prod, u, multiply(prod, v, w));
}

Tensor associator_tensor(const ProductAtPoint& prod) {
  int n = prod.dim();
  Tensor t(n, {Slot::lower, Slot::lower, Slot::lower, Slot::upper});
  // (e_i★e_j)★e_k − e_i★(e_j★e_k) = ★_ij^b ★_bk^a − ★_jk^b ★_ib^a
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
          double v = 0.0;
          for (int b = 0; b < n; ++b) v += prod.star(i, j, b) * prod.star(b, k, a) - prod.star(j, k, b) * prod.star(i, b, a);
          t(i, j, k, a) = v;
        }
  return t;
}

double max_associator(const ProductAtPoint& prod) { return associator_tensor(prod).max_abs(); }

double max_commutator(const ProductAtPoint& prod) {
  int n = prod.dim();
  std::vector<Eigen::MatrixXd> m;
  for (int i = 0; i < n; ++i) m.push_back(prod.endomorphism(i));
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) r = std::max(r, (m[i] * m[j] - m[j] * m[i]).cwiseAbs().maxCoeff());
  return r;
}

Signature estimate_mu(const ProductAtPoint& prod, const Curvature& riem, double tolerance) {
  int n = prod.dim();
  if (riem.op.dim() != n) throw DimensionError("estimate_mu: curvature dimension mismatch");
  std::vector<Eigen::MatrixXd> m;
  for (int i = 0; i < n; ++i) m.push_back(prod.endomorphism(i));
  std::vector<Eigen::MatrixXd> comm, curv;
  double cr = 0.0, rr = 0.0, cmax = 0.0, rmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::MatrixXd c = m[i] * m[j] - m[j] * m[i];
      Eigen::MatrixXd r(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) r(a, b) = riem.op(a, b, i, j);
      cr += (c.array() * r.array()).sum();
      rr += r.squaredNorm();
      cmax = std::max(cmax, c.cwiseAbs().maxCoeff());
      rmax = std::max(rmax, r.cwiseAbs().maxCoeff());
      comm.push_back(std::move(c));
      curv.push_back(std::move(r));
    }

  Signature sig;
  if (rmax <= tol::flat_curvature) {
    sig.indeterminate = true;
    sig.epsilon = 0;
    double scale = std::max(1.0, prod.star.max_abs() * prod.star.max_abs());
    sig.residual = cmax / scale;
  } else {
    double mu = cr / rr;
    double dev = 0.0;
    for (std::size_t p = 0; p < comm.size(); ++p) dev = std::max(dev, (comm[p] - mu * curv[p]).cwiseAbs().maxCoeff());
    double scale = std::max(cmax, std::abs(mu) * rmax);
    sig.mu = mu;
    sig.residual = scale > 0.0 ? dev / scale : 0.0;
    sig.epsilon = std::abs(mu) <= tol::mu_zero ? 0 : (mu > 0.0 ? 1 : -1);
  }
  if (sig.residual > tolerance) {
    throw NotCurvedFrobeniusError("not a Curved Frobenius product at this point: relative residual " +
                                  std::to_string(sig.residual) + " of [*(X),*(Y)] = mu R(X,Y)");
  }
  return sig;
}

ProductAtPoint normalize(const ProductAtPoint& prod, const Signature& sig) {
  if (sig.indeterminate) {
    if (max_commutator(prod) > tol::mu_residual * std::max(1.0, prod.star.max_abs() * prod.star.max_abs()))
      throw InputError("normalize: indeterminate signature with non-commuting product");
    return prod;
  }
  double mu = sig.mu.value_or(0.0);
  if (sig.epsilon == 0 || mu == 0.0) return ProductAtPoint::zero(prod.metric);
  ProductAtPoint out = prod;
  out.star *= 1.0 / std::sqrt(std::abs(mu));
  return out;
}

AssociatorReport check_lie_triple(const ProductAtPoint& prod, const Curvature& riem) {
  int n = prod.dim();
  Tensor assoc = associator_tensor(prod);
  AssociatorReport rep;
  rep.triple = Tensor(n, {Slot::lower, Slot::lower, Slot::lower, Slot::upper});
  Tensor& c = rep.triple;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) c(i, j, k, a) = assoc(i, k, j, a);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
          rep.skew_residual = std::max(rep.skew_residual, std::abs(c(i, j, k, a) + c(j, i, k, a)));
          rep.cyclic_residual = std::max(rep.cyclic_residual, std::abs(c(i, j, k, a) + c(j, k, i, a) + c(k, i, j, a)));
        }

  // C(u,v,C(w1,w2,w3)) = C(C(u,v,w1),w2,w3) + C(w1,C(u,v,w2),w3) + C(w1,w2,C(u,v,w3))
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      for (int w1 = 0; w1 < n; ++w1)
        for (int w2 = 0; w2 < n; ++w2)
          for (int w3 = 0; w3 < n; ++w3)
            for (int a = 0; a < n; ++a) {
              double lhs = 0.0, rhs = 0.0;
              for (int b = 0; b < n; ++b) {
                lhs += c(w1, w2, w3, b) * c(u, v, b, a);
                rhs += c(u, v, w1, b) * c(b, w2, w3, a) + c(u, v, w2, b) * c(w1, b, w3, a) + c(u, v, w3, b) * c(w1, w2, b, a);
              }
              rep.lie_triple_residual = std::max(rep.lie_triple_residual, std::abs(lhs - rhs));
            }

  const Eigen::MatrixXd& g = prod.metric.g;
  Tensor psi(n, {Slot::lower, Slot::lower, Slot::lower, Slot::upper});
  double cp = 0.0, pp = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
          double v = (a == j ? g(i, k) : 0.0) - (a == i ? g(j, k) : 0.0);
          psi(i, j, k, a) = v;
          cp += v * c(i, j, k, a);
          pp += v * v;
        }
  rep.psi_coefficient = pp > 0.0 ? cp / pp : 0.0;
  for (std::size_t f = 0; f < psi.size(); ++f)
    rep.psi_residual = std::max(rep.psi_residual, std::abs(c[f] - rep.psi_coefficient * psi[f]));

  // Sectional curvature of the (e_0, e_1) plane: R_0101 / (g_00 g_11 − g_01²).
  Tensor rl = riem.lowered(g);
  double area = g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1);
  double kappa = rl(0, 1, 0, 1) / area;
  try {
    Signature sig = estimate_mu(prod, riem, std::numeric_limits<double>::infinity());
    rep.expected_coefficient = sig.mu.value_or(0.0) * kappa;
  } catch (const Error&) {
    rep.expected_coefficient = 0.0;
  }

  // Jordan identity residual on basis pairs (x = e_i, y = e_j and x = e_i + e_j).
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec x = Vec::Unit(n, i) + (i == j ? Vec::Zero(n) : Vec(Vec::Unit(n, j)));
      Vec y = Vec::Unit(n, j);
      Vec xx = multiply(prod, x, x);
      Vec r = multiply(prod, xx, multiply(prod, x, y)) - multiply(prod, x, multiply(prod, xx, y));
      rep.jordan_residual = std::max(rep.jordan_residual, r.cwiseAbs().maxCoeff());
    }
  return rep;
}

double check_jordan_flat(const ProductAtPoint& prod, int samples) {
  double scale = std::max(1.0, prod.star.max_abs() * prod.star.max_abs());
  if (max_commutator(prod) > tol::associativity * scale)
    throw PreconditionError("check_jordan_flat: endomorphisms of the product do not commute");
  int n = prod.dim();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec x(n), y(n);
    for (int i = 0; i < n; ++i) x(i) = normal(rng);
    for (int i = 0; i < n; ++i) y(i) = normal(rng);
    Vec xx = multiply(prod, x, x);
    Vec r = multiply(prod, xx, multiply(prod, x, y)) - multiply(prod, x, multiply(prod, xx, y));
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

SeedValidation validate_seed(const ProductAtPoint& prod, double kappa, double tolerance) {
  int n = prod.dim();
  SeedValidation v;
  v.commutativity = prod.commutativity_residual();
  v.compatibility = prod.compatibility_residual();
  Tensor assoc = associator_tensor(prod);
  const Eigen::MatrixXd& g = prod.metric.g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
          double target = kappa * ((a == i ? g(j, k) : 0.0) - (a == k ? g(i, j) : 0.0));
          v.associator = std::max(v.associator, std::abs(assoc(i, j, k, a) - target));
        }
  v.passed = v.commutativity <= tolerance && v.compatibility <= tolerance && v.associator <= tolerance;
  return v;
}

namespace {

struct SymmetricBasis {
  std::vector<std::array<int, 3>> combos;

  explicit SymmetricBasis(int n) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) combos.push_back({i, j, k});
  }

  Tensor expand(const Eigen::VectorXd& v, int n) const {
    Tensor p = Tensor::lowered3(n);
    for (std::size_t c = 0; c < combos.size(); ++c) {
      auto [i, j, k] = combos[c];
      int perm[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
      for (auto& q : perm) p(q[0], q[1], q[2]) = v(static_cast<Eigen::Index>(c));
    }
    return p;
  }
};

// B(A, C)(ijkl) = A_ij^a C_akl − A_ik^a C_ajl with the index raised by g⁻¹.
void algebraic_form(const Tensor& a, const Tensor& c, const Eigen::MatrixXd& g_inv, Eigen::Ref<Eigen::VectorXd> out) {
  int n = a.dim();
  Eigen::Index row = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) v += g_inv(p, q) * (a(i, j, p) * c(q, k, l) - a(i, k, p) * c(q, j, l));
          out(row++) = v;
        }
}

Eigen::VectorXd seed_residual(const Tensor& p, const Eigen::MatrixXd& g, const Eigen::MatrixXd& g_inv, double kappa) {
  int n = p.dim();
  Eigen::VectorXd r(n * n * n * n);
  algebraic_form(p, p, g_inv, r);
  Eigen::Index row = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) r(row++) += kappa * (g(i, j) * g(k, l) - g(i, k) * g(j, l));
  return r;
}

}  // namespace

ProductAtPoint solve_seed_algebra(int n, const MetricAtPoint& metric, double kappa, std::uint64_t rng_seed,
                                  const SeedSolverOptions& options) {
  if (n < 2) throw InputError("solve_seed_algebra: n must be at least 2");
  if (metric.g.rows() != n) throw DimensionError("solve_seed_algebra: metric dimension mismatch");
  if (std::abs(kappa) <= tol::flat_kappa) return ProductAtPoint::zero(metric);

  SymmetricBasis basis(n);
  auto unknowns = static_cast<Eigen::Index>(basis.combos.size());
  double unit = std::pow(metric.g.trace() / n, 1.5);
  double scale = std::sqrt(std::abs(kappa)) * unit;
  double target = 1e-14 * std::max(1.0, std::abs(kappa)) * unit * unit;

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> directions;
  for (Eigen::Index c = 0; c < unknowns; ++c) directions.push_back(basis.expand(Eigen::VectorXd::Unit(unknowns, c), n));

  std::optional<ProductAtPoint> best;
  double best_bound = 0.0;
  int found = 0;
  for (int attempt = 0; attempt < options.max_restarts && found < std::max(1, options.candidates); ++attempt) {
    Eigen::VectorXd v(unknowns);
    for (Eigen::Index c = 0; c < unknowns; ++c) v(c) = scale * normal(rng);
    Tensor p = basis.expand(v, n);
    Eigen::VectorXd r = seed_residual(p, metric.g, metric.g_inv, kappa);
    for (int it = 0; it < options.max_iterations && r.cwiseAbs().maxCoeff() > target; ++it) {
      Eigen::MatrixXd jac(r.size(), unknowns);
      Eigen::VectorXd col(r.size()), col2(r.size());
      for (Eigen::Index c = 0; c < unknowns; ++c) {
        algebraic_form(directions[static_cast<std::size_t>(c)], p, metric.g_inv, col);
        algebraic_form(p, directions[static_cast<std::size_t>(c)], metric.g_inv, col2);
        jac.col(c) = col + col2;
      }
      Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-r);
      double norm0 = r.norm();
      double t = 1.0;
      for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
        Eigen::VectorXd trial = v + t * step;
        Tensor pt = basis.expand(trial, n);
        Eigen::VectorXd rt = seed_residual(pt, metric.g, metric.g_inv, kappa);
        if (rt.norm() < norm0 || ls == 11) {
          v = trial;
          p = std::move(pt);
          r = std::move(rt);
          break;
        }
      }
      if (!v.allFinite()) break;
    }
    if (!v.allFinite() || r.cwiseAbs().maxCoeff() > target * 100.0) continue;
    ProductAtPoint prod = ProductAtPoint::from_lowered(p, metric);
    symmetrize_product(prod.star);
    if (!validate_seed(prod, kappa).passed) continue;
    ++found;
    double bound = spectral_bound(prod);
    if (!best || bound < best_bound) {
      best = std::move(prod);
      best_bound = bound;
    }
  }
  if (best) return *best;
  throw SolverError("solve_seed_algebra: no convergence within the restart budget");
}

double spectral_bound(const ProductAtPoint& prod) {
  int n = prod.dim();
  std::vector<Eigen::MatrixXd> m;
  for (int i = 0; i < n; ++i) m.push_back(prod.endomorphism(i));
  Eigen::LLT<Eigen::MatrixXd> llt(prod.metric.g);
  Eigen::MatrixXd u_inv = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  std::mt19937_64 rng(0xb0b);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  int samples = 256 * n;
  for (int s = -2 * n; s < samples; ++s) {
    Vec e(n);
    if (s < 0) {
      e = Vec::Unit(n, (s + 2 * n) % n) * ((s + 2 * n) < n ? 1.0 : -1.0);
    } else {
      for (int i = 0; i < n; ++i) e(i) = normal(rng);
      e.normalize();
    }
    // g-unit vector v = U⁻¹ e, since g = UᵀU.
    Vec v = u_inv * e;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a += v(i) * m[static_cast<std::size_t>(i)];
    worst = std::max(worst, a.eigenvalues().real().maxCoeff());
  }
  return worst;
}

std::string to_string(Label label) {
  switch (label) {
    case Label::hessian: return "hessian";
    case Label::nonflat_associative: return "nonflat_associative";
    case Label::skew_hessian: return "skew_hessian";
    case Label::manin_frobenius: return "manin_frobenius";
  }
  return "unknown";
}

Label label_from_string(const std::string& name) {
  for (Label l : {Label::hessian, Label::nonflat_associative, Label::skew_hessian, Label::manin_frobenius})
    if (to_string(l) == name) return l;
  throw InputError("unknown classification label: " + name);
}

Label classify(const Signature& sig, bool flat, double assoc_residual) {
  bool associative = assoc_residual <= tol::associativity;
  if (flat) {
    if (!sig.indeterminate && sig.epsilon != 0)
      throw ClassificationError("classify: flat metric with non-vanishing commutator fit");
    if (!associative) throw ClassificationError("classify: flat metric requires an associative product");
    return Label::manin_frobenius;
  }
  if (sig.indeterminate) throw ClassificationError("classify: non-flat metric with indeterminate signature");
  if (sig.epsilon < 0) return Label::hessian;
  if (sig.epsilon > 0) return Label::skew_hessian;
  if (!associative) throw ClassificationError("classify: mu = 0 requires an associative product");
  return Label::nonflat_associative;
}

}  // namespace frob
