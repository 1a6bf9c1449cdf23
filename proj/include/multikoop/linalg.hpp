#pragma once

#include "multikoop/types.hpp"

namespace multikoop {

double spectral_radius(const MatrixXd& a);

// Largest / smallest singular value.
double spectral_norm(const MatrixXd& a);
double smallest_singular_value(const MatrixXd& a);

// Solves (I - a) x = b, throwing SingularityError when sigma_min(I - a)
// falls below tol. `context` names the block for the error message.
MatrixXd solve_i_minus(const MatrixXd& a, const MatrixXd& b, double tol, const std::string& context);

}  // namespace multikoop
