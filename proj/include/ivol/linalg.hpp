#pragma once

#include <Eigen/Dense>

namespace ivol::linalg {

inline constexpr double kEigenFloor = 1e-12;

/// (M + Mᵀ) / 2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Symmetrizes and raises every eigenvalue below `floor` to `floor`.
/// Matrices already above the floor are returned symmetrized but otherwise unchanged.
Eigen::MatrixXd enforce_psd(const Eigen::MatrixXd& m, double floor = kEigenFloor);

double max_asymmetry(const Eigen::MatrixXd& m);
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

bool is_symmetric_psd(const Eigen::MatrixXd& m, double sym_tol, double eig_tol);

}  // namespace ivol::linalg
