#include "frobenius/tolerances.hpp"

#include "frobenius/error.hpp"

namespace frob {

Tolerances::Tolerances()
    : constants_{
          {"hmf_residual", 1200.0},
          {"curvature_condition", 1.0},
          {"potentiality", 350.0},
          {"connection_flatness", 350.0},
          {"twice_curvature", 2.0},
          {"affine_pullback", 15.0},
          {"closedness", 1600.0},
          {"hessian_potential", 25.0},
          {"hesse_frobenius_consistency", 350.0},
          {"d3_potential", 200.0},
          {"weak_condition", 300.0},
          {"difference_of_potentials", 130.0},
          {"sis_alg", 1.0},
          {"better_form", 1000.0},
          {"sis_diff", 350.0},
          {"potential_pde", 10.0},
          {"metricity", 2.5},
          {"curvature_fd", 2.0},
      } {}

double Tolerances::constant(const std::string& check) const {
  auto it = constants_.find(check);
  if (it == constants_.end()) throw InputError("unknown tolerance key: " + check);
  return it->second;
}

void Tolerances::set_constant(const std::string& check, double c) {
  if (!(c > 0.0)) throw InputError("tolerance constants must be positive: " + check);
  constant(check);
  constants_[check] = c;
}

}  // namespace frob
