#include "ivol/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ivol/errors.hpp"

namespace ivol::spline {
namespace {

constexpr Eigen::Index kMinBins = 4;

void check_args(double lambda, Eigen::Index bins) {
  if (bins < kMinBins) throw DomainError("smoothing spline needs at least 4 grid points, got " + std::to_string(bins));
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and non-negative");
}

// LDL' factorisation of the symmetric pentadiagonal matrix
//   M = R + lambda Q'Q   (size m = bins - 2, unit spacing)
// with R = tridiag(1/6, 2/3, 1/6) and Q'Q = pentadiag(1, -4, 6, -4, 1).
class Reinsch {
 public:
  Reinsch(double lambda, Eigen::Index bins) : m_(bins - 2), d_(m_), e_(m_), f_(m_) {
    for (Eigen::Index j = 0; j < m_; ++j) {
      const double a = 2.0 / 3.0 + 6.0 * lambda;
      const double b = 1.0 / 6.0 - 4.0 * lambda;  // (j, j+1)
      const double c = lambda;                    // (j, j+2)
      double dj = a;
      if (j >= 1) dj -= e_(j - 1) * e_(j - 1) * d_(j - 1);
      if (j >= 2) dj -= f_(j - 2) * f_(j - 2) * d_(j - 2);
      d_(j) = dj;
      double bj = b;
      if (j >= 1) bj -= e_(j - 1) * f_(j - 1) * d_(j - 1);
      e_(j) = j + 1 < m_ ? bj / dj : 0.0;
      f_(j) = j + 2 < m_ ? c / dj : 0.0;
    }
  }

  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
    for (Eigen::Index j = 0; j < m_; ++j) {
      if (j >= 1) x(j) -= e_(j - 1) * x(j - 1);
      if (j >= 2) x(j) -= f_(j - 2) * x(j - 2);
    }
    for (Eigen::Index j = 0; j < m_; ++j) x(j) /= d_(j);
    for (Eigen::Index j = m_ - 1; j >= 0; --j) {
      if (j + 1 < m_) x(j) -= e_(j) * x(j + 1);
      if (j + 2 < m_) x(j) -= f_(j) * x(j + 2);
    }
  }

 private:
  Eigen::Index m_;
  Eigen::VectorXd d_, e_, f_;
};

// Q'y: second differences.
Eigen::VectorXd second_difference(const Eigen::VectorXd& y) {
  const Eigen::Index m = y.size() - 2;
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) out(j) = y(j) - 2.0 * y(j + 1) + y(j + 2);
  return out;
}

// Q gamma.
Eigen::VectorXd spread(const Eigen::VectorXd& gamma, Eigen::Index bins) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    out(j) += gamma(j);
    out(j + 1) -= 2.0 * gamma(j);
    out(j + 2) += gamma(j);
  }
  return out;
}

}  // namespace

Eigen::VectorXd SplineFit::project(const Eigen::VectorXd& y) const {
  if (y.size() != directions.rows()) throw ShapeError("projection input has wrong length");
  return directions * (directions.transpose() * y);
}

Eigen::VectorXd smooth(const Eigen::VectorXd& y, double lambda) {
  check_args(lambda, y.size());
  if (lambda == 0.0) return y;
  const Reinsch factor(lambda, y.size());
  Eigen::VectorXd gamma = second_difference(y);
  factor.solve_in_place(gamma);
  return y - lambda * spread(gamma, y.size());
}

Eigen::MatrixXd smoother_matrix(double lambda, Eigen::Index bins) {
  check_args(lambda, bins);
  if (lambda == 0.0) return Eigen::MatrixXd::Identity(bins, bins);
  const Reinsch factor(lambda, bins);
  Eigen::MatrixXd s(bins, bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    Eigen::VectorXd unit = Eigen::VectorXd::Unit(bins, k);
    Eigen::VectorXd gamma = second_difference(unit);
    factor.solve_in_place(gamma);
    s.col(k) = unit - lambda * spread(gamma, bins);
  }
  return s;
}

double effective_dof(double lambda, Eigen::Index bins) {
  check_args(lambda, bins);
  if (lambda == 0.0) return static_cast<double>(bins);
  // trace(S) = bins - lambda tr(M^-1 Q'Q) = 2 + tr(M^-1 R); the second form has no cancellation.
  const Reinsch factor(lambda, bins);
  const Eigen::Index m = bins - 2;
  double trace = 2.0;
  Eigen::VectorXd col(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    col.setZero();
    col(j) = 2.0 / 3.0;
    if (j >= 1) col(j - 1) = 1.0 / 6.0;
    if (j + 1 < m) col(j + 1) = 1.0 / 6.0;
    factor.solve_in_place(col);
    trace += col(j);
  }
  return trace;
}

double lambda_for_dof(double target_dof, Eigen::Index bins, double tol) {
  if (bins < kMinBins) throw DomainError("smoothing spline needs at least 4 grid points");
  const double top = static_cast<double>(bins);
  if (!(target_dof >= 2.0 && target_dof <= top)) {
    throw DomainError("target DOF " + std::to_string(target_dof) + " outside [2, " + std::to_string(bins) + "]");
  }
  if (target_dof == top) return 0.0;

  auto gap = [&](double lambda) { return effective_dof(lambda, bins) - target_dof; };

  double lo = 1e-10;
  double hi = 1e12;
  double g_lo = gap(lo);
  if (std::abs(g_lo) < tol) return lo;
  if (g_lo < 0.0) {
    // Target sits between dof(1e-10) and bins: bisect linearly on [0, 1e-10].
    double a = 0.0, b = lo;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      const double g = gap(mid);
      if (std::abs(g) < tol) return mid;
      (g > 0.0 ? a : b) = mid;
    }
    throw ConvergenceError("lambda_for_dof: no convergence near lambda = 0");
  }
  double g_hi = gap(hi);
  while (g_hi > 0.0 && std::abs(g_hi) >= tol) {
    if (hi >= 1e20) throw ConvergenceError("lambda_for_dof: cannot bracket target DOF " + std::to_string(target_dof));
    lo = hi;
    hi *= 100.0;
    g_hi = gap(hi);
  }
  if (std::abs(g_hi) < tol) return hi;

  double log_lo = std::log(lo), log_hi = std::log(hi);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (log_lo + log_hi);
    const double lambda = std::exp(mid);
    const double g = gap(lambda);
    if (std::abs(g) < tol) return lambda;
    (g > 0.0 ? log_lo : log_hi) = mid;
    if (log_hi - log_lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  throw ConvergenceError("lambda_for_dof: bisection did not reach tolerance " + std::to_string(tol));
}

SplineFit fit_spline_at(const Eigen::VectorXd& y, double lambda, Eigen::Index rank) {
  const Eigen::Index bins = y.size();
  check_args(lambda, bins);
  if (rank < 1 || rank > bins) throw DomainError("basis rank outside [1, I]");
  SplineFit fit;
  fit.lambda = lambda;
  fit.smoother = smoother_matrix(lambda, bins);
  fit.fitted = fit.smoother * y;
  fit.effective_dof = effective_dof(lambda, bins);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (fit.smoother + fit.smoother.transpose()));
  // Eigen returns ascending order; keep the top `rank`.
  fit.directions.resize(bins, rank);
  fit.eigenvalues.resize(rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    const Eigen::Index src = bins - 1 - k;
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    fit.directions.col(k) = v;
    fit.eigenvalues(k) = std::clamp(es.eigenvalues()(src), 0.0, 1.0);
  }
  fit.basis = fit.directions * fit.eigenvalues.cwiseSqrt().asDiagonal();
  return fit;
}

SplineFit fit_spline(const Eigen::VectorXd& y, double target_dof, double tol) {
  const double lambda = lambda_for_dof(target_dof, y.size(), tol);
  return fit_spline_at(y, lambda, static_cast<Eigen::Index>(std::lround(target_dof)));
}

}  // namespace ivol::spline
