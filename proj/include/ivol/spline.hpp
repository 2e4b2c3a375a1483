#pragma once

#include <Eigen/Dense>

namespace ivol::spline {

/// Natural cubic smoothing spline on the equally spaced grid x = 1..I with
/// knots at every grid point. The fit minimises
///   sum_i (y_i - g(x_i))^2 + lambda * integral g''(x)^2 dx,
/// whose solution is linear in y: g = S_lambda y.
struct SplineFit {
  double lambda = 0.0;
  Eigen::MatrixXd smoother;   // I x I, S_lambda
  Eigen::VectorXd fitted;     // S_lambda * y
  double effective_dof = 0.0; // trace(S_lambda)
  /// I x n: top-n eigenvectors of S_lambda (descending eigenvalue), each
  /// scaled by the square root of its eigenvalue.
  Eigen::MatrixXd basis;
  /// The same eigenvectors, unscaled (orthonormal columns).
  Eigen::MatrixXd directions;
  Eigen::VectorXd eigenvalues;  // the n retained eigenvalues, descending

  Eigen::Index rank() const { return basis.cols(); }
  /// Orthogonal projection of `y` onto the span of the basis.
  Eigen::VectorXd project(const Eigen::VectorXd& y) const;
};

/// g = S_lambda y via the banded Reinsch system (R + lambda Q'Q) gamma = Q'y.
Eigen::VectorXd smooth(const Eigen::VectorXd& y, double lambda);

Eigen::MatrixXd smoother_matrix(double lambda, Eigen::Index bins);

/// trace(S_lambda), in [2, bins].
double effective_dof(double lambda, Eigen::Index bins);

/// Smallest-effort inversion of effective_dof by bisection on log(lambda).
/// Returns 0 for target == bins.
double lambda_for_dof(double target_dof, Eigen::Index bins, double tol = 1e-9);

/// Fit at a requested effective DOF; the basis rank is round(target_dof).
SplineFit fit_spline(const Eigen::VectorXd& y, double target_dof, double tol = 1e-9);

/// Fit at a known lambda with an explicit basis rank.
SplineFit fit_spline_at(const Eigen::VectorXd& y, double lambda, Eigen::Index rank);

}  // namespace ivol::spline
