#pragma once

#include <string>
#include <vector>

#include "frobenius/algebra.hpp"
#include "frobenius/hessian.hpp"
#include "frobenius/prolongation.hpp"
#include "frobenius/tolerances.hpp"

namespace frob {

/// Pointwise structural data: T(i, j, k) = T_ij^k (symmetric and g-trace-free
/// in i, j), its lowered trace-free part T̊_ijk, t_k = T_ka^a and
/// t̄ = n t / ((n−1)(n+2)).
struct StructuralPoint {
  Tensor T;
  Tensor tracefree;
  Tensor t;
  Tensor t_bar;
};

struct StructuralTensor {
  Grid grid;
  std::vector<Tensor> T;
  std::vector<Tensor> tracefree;
};

struct TraceForm {
  Grid grid;
  std::vector<Tensor> t;
  std::vector<Tensor> t_bar;
};

struct PotentialV {
  Grid grid;
  std::vector<double> V;
  /// Filled by verify_potential_pde from the same finite-difference Hessian.
  std::vector<double> laplacian;
};

/// P_ijk = (1/3)(g_kc T_ij^c + g_ij t_k / (n−1)).
Tensor p_from_t_tensor(const Tensor& T, const Tensor& t, const MetricAtPoint& metric);

/// t_k = 3(n−1)/n g^{ij} P_ijk, T_ijk = 3 P_ijk − g_ij t_k / (n−1). Throws
/// InputError for P that is not totally symmetric.
StructuralPoint T_from_P(const Tensor& P, const MetricAtPoint& metric);

/// Symmetrization followed by removal of all g-traces.
Tensor tracefree_sym_projector(const Tensor& A, const MetricAtPoint& metric);

/// max |g⁻¹(P(e_i,e_j), P(e_k,e_l)) − g⁻¹(P(e_i,e_k), P(e_j,e_l)) + κ(g_ij g_kl − g_ik g_jl)|.
double check_sis_alg(const Tensor& P, const MetricAtPoint& metric, double kappa);

/// Field versions of T_from_P.
void structural_fields(const Chart& chart, const TensorField& lowered, StructuralTensor& T, TraceForm& t);

struct SisDiffReport {
  /// ∇_l T̊_ijk against the printed right side (coefficient 1/13).
  ResidualField ds;
  /// ∇_l t̄_k against its printed right side with R = n(n−1)κ.
  ResidualField dt;
  double printed_coefficient = 1.0 / 13.0;
  /// Least-squares coefficient c in ∇T̊ ≈ c·Π[…] over all valid nodes.
  double fitted_coefficient = 0.0;
  /// Max residual of the DS equation with the fitted coefficient.
  double ds_fitted_residual = 0.0;
};

/// Throws UnsupportedError for n = 2.
SisDiffReport check_sis_diff(const Chart& chart, const StructuralTensor& T, const TraceForm& t);

/// |∇_l C_ijk − C_ija g^{ab} C_bkl − κ(2 g_ij g_kl + g_ik g_jl + g_jk g_il)| per node.
ResidualField check_better_form(const Chart& chart, const TensorField& lowered);

/// |∇²_ij V − T_ij^k ∇_k V − (1/n) g_ij ΔV| per node.
ResidualField verify_potential_pde(const Chart& chart, PotentialV& V, const StructuralTensor& T);

struct CheckEntry {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  /// Diagnostics do not enter the overall pass flag.
  bool diagnostic = false;
  std::string note;
};

struct BridgeReport {
  std::vector<CheckEntry> checks;
  std::string label;
  std::string classification_error;
  bool hessian_side = false;
  bool sis_diff_discrepancy = false;
  double fitted_ds_coefficient = 0.0;

  bool passed() const;
};

BridgeReport bridge_report(const ProductField& field, const Tolerances& tols = {});

/// Signature of a whole field: the node-wise fits must agree in sign.
Signature field_signature(const ProductField& field, FieldSignature* summary = nullptr);
Label classify_field(const ProductField& field);

}  // namespace frob
