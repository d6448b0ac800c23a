#pragma once

#include <map>
#include <string>

namespace frob {

namespace tol {

// Pointwise algebra.
inline constexpr double flat_kappa = 1e-12;        // |κ| at or below this is flat
inline constexpr double flat_curvature = 1e-12;    // max |R| at or below this is R = 0
inline constexpr double mu_residual = 1e-8;        // relative fit residual of [★,★] = μR
inline constexpr double associativity = 1e-8;      // max associator component
inline constexpr double seed = 1e-10;              // validate_seed residuals
inline constexpr double mu_zero = 1e-12;           // |μ| at or below this is μ = 0
inline constexpr double symmetric_input = 1e-12;   // relative asymmetry accepted as symmetric

// Integration.
inline constexpr double blow_up = 1e6;             // component magnitude
inline constexpr double affine_path_disagreement = 1e-6;
inline constexpr double default_rk_step = 2e-3;

}  // namespace tol

/// Finite-difference residual tolerances are C·h² with h the largest grid
/// spacing; one constant per check. Defaults are about 4x the worst value seen
/// on constructed fields for n = 2 (box ±0.3) and n = 3 (box ±0.15), κ = ±1,
/// at two resolutions each.
class Tolerances {
 public:
  Tolerances();

  double constant(const std::string& check) const;
  void set_constant(const std::string& check, double c);
  double fd(const std::string& check, double h) const { return constant(check) * h * h; }

  const std::map<std::string, double>& constants() const noexcept { return constants_; }

 private:
  std::map<std::string, double> constants_;
};

}  // namespace frob
