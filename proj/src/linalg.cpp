#include "ivol/linalg.hpp"

namespace ivol::linalg {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd enforce_psd(const Eigen::MatrixXd& m, double floor) {
  Eigen::MatrixXd s = symmetrize(m);
  if (s.size() == 0) return s;
  // Cheap acceptance test before paying for an eigendecomposition.
  Eigen::MatrixXd shifted = s;
  shifted.diagonal().array() -= floor;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() == Eigen::Success) return s;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(out);
}

double max_asymmetry(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric_psd(const Eigen::MatrixXd& m, double sym_tol, double eig_tol) {
  if (m.rows() != m.cols()) return false;
  return max_asymmetry(m) <= sym_tol && min_eigenvalue(m) >= -eig_tol;
}

}  // namespace ivol::linalg
