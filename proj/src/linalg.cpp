#include "multikoop/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace multikoop {

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(a).singularValues()(0);
}

double smallest_singular_value(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  const auto sv = Eigen::JacobiSVD<MatrixXd>(a).singularValues();
  return sv(sv.size() - 1);
}

MatrixXd solve_i_minus(const MatrixXd& a, const MatrixXd& b, double tol, const std::string& context) {
  const MatrixXd m = MatrixXd::Identity(a.rows(), a.cols()) - a;
  const double smin = smallest_singular_value(m);
  if (smin < tol)
    throw SingularityError(context + ": (I - K) is near-singular (sigma_min = " +
                               std::to_string(smin) + "); reduce rho_target or refit",
                           smin);
  return m.partialPivLu().solve(b);
}

}  // namespace multikoop
