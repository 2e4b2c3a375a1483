#include "ivol/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ivol/errors.hpp"

namespace ivol {
namespace {

constexpr double kVarianceFloor = 1e-12;

// Scalar-observation step for the two-state filter; C = [1 1].
struct Step {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

Eigen::Matrix2d transition(const TwoStateModel& m) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  a(0, 0) = m.a_eta;
  a(1, 1) = m.a_mu;
  return a;
}

Eigen::Matrix2d process_cov(const TwoStateModel& m) {
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  q(0, 0) = m.sigma_eta * m.sigma_eta;
  q(1, 1) = m.sigma_mu * m.sigma_mu;
  return q;
}

void check_finite(const Eigen::MatrixXd& log_obs) {
  if (!log_obs.allFinite()) throw DomainError("two-state model needs finite log volumes (zero-volume bin?)");
}

struct Forward {
  std::vector<Eigen::Vector2d> pred_mean, filt_mean;
  std::vector<Eigen::Matrix2d> pred_cov, filt_cov;
  Eigen::VectorXd predicted_obs;
  double log_likelihood = 0.0;
};

Forward forward(const TwoStateModel& m, const Eigen::MatrixXd& log_obs, bool keep) {
  const Eigen::Index bins = log_obs.cols();
  const Eigen::Index total = log_obs.rows() * bins;
  const Eigen::Matrix2d a = transition(m);
  const Eigen::Matrix2d q = process_cov(m);
  Forward out;
  out.predicted_obs.resize(total);
  if (keep) {
    out.pred_mean.reserve(static_cast<std::size_t>(total));
    out.pred_cov.reserve(static_cast<std::size_t>(total));
    out.filt_mean.reserve(static_cast<std::size_t>(total));
    out.filt_cov.reserve(static_cast<std::size_t>(total));
  }
  Eigen::Vector2d x = m.pi1;
  Eigen::Matrix2d p = m.Sigma1;
  for (Eigen::Index tau = 0; tau < total; ++tau) {
    if (tau > 0) {
      x = a * x;
      p = a * p * a.transpose() + q;
    }
    const Eigen::Index bin = tau % bins;
    const double y = log_obs(tau / bins, bin);
    const double yhat = x.sum() + m.phi(bin);
    const double f = p.sum() + m.r;
    if (!(f > 0.0)) throw ConditioningError("two-state innovation variance is not positive");
    out.predicted_obs(tau) = yhat;
    if (keep) {
      out.pred_mean.push_back(x);
      out.pred_cov.push_back(p);
    }
    const Eigen::Vector2d k = p.rowwise().sum() / f;  // P C' / f
    const double v = y - yhat;
    out.log_likelihood -= 0.5 * (std::log(2.0 * std::numbers::pi * f) + v * v / f);
    x += k * v;
    Eigen::Matrix2d jo = Eigen::Matrix2d::Identity() - k * Eigen::RowVector2d::Ones();
    p = jo * p * jo.transpose() + m.r * k * k.transpose();
    p = 0.5 * (p + p.transpose());
    if (keep) {
      out.filt_mean.push_back(x);
      out.filt_cov.push_back(p);
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd rm_predict(const Eigen::MatrixXd& percentages, const RmConfig& config, Eigen::Index t) {
  if (config.window < 1) throw DomainError("rolling-mean window must be >= 1");
  if (t <= 0) throw BoundsError("rm_predict: no history before day 0");
  if (t > percentages.rows()) throw BoundsError("rm_predict: day index past the panel");
  const Eigen::Index begin = std::max<Eigen::Index>(0, t - config.window);
  const Eigen::VectorXd mean = percentages.middleRows(begin, t - begin).colwise().mean().transpose();
  return to_percentages(mean);
}

Eigen::MatrixXd rm_rollout(const Eigen::MatrixXd& percentages, const RmConfig& config, Eigen::Index first) {
  if (first < 1 || first > percentages.rows()) throw BoundsError("rm_rollout: first day out of range");
  Eigen::MatrixXd out(percentages.rows() - first, percentages.cols());
  for (Eigen::Index t = first; t < percentages.rows(); ++t) out.row(t - first) = rm_predict(percentages, config, t).transpose();
  return out;
}

void TwoStateModel::validate() const {
  if (phi.size() < 1) throw ShapeError("two-state model needs a non-empty seasonality vector");
  if (sigma_eta < 0.0 || sigma_mu < 0.0 || r < 0.0) throw DomainError("two-state noise scales must be non-negative");
  if (std::abs(Sigma1(0, 1) - Sigma1(1, 0)) > 1e-10) throw DomainError("two-state Sigma1 is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Sigma1);
  if (es.eigenvalues().minCoeff() < -1e-10) throw DomainError("two-state Sigma1 is not positive semidefinite");
}

TwoStateFilterResult two_state_filter(const TwoStateModel& model, const Eigen::MatrixXd& log_obs) {
  model.validate();
  if (log_obs.cols() != model.phi.size()) throw ShapeError("log observations width differs from I");
  check_finite(log_obs);
  Forward f = forward(model, log_obs, true);
  TwoStateFilterResult out;
  out.predicted_obs = std::move(f.predicted_obs);
  out.log_likelihood = f.log_likelihood;
  out.final_mean = f.filt_mean.empty() ? model.pi1 : f.filt_mean.back();
  out.final_cov = f.filt_cov.empty() ? model.Sigma1 : f.filt_cov.back();
  return out;
}

TwoStateFit two_state_fit(const Eigen::MatrixXd& log_obs, const EmOptions& options) {
  const Eigen::Index days = log_obs.rows();
  const Eigen::Index bins = log_obs.cols();
  if (days < 2 || bins < 1) throw InsufficientDataError("two_state_fit needs at least two days");
  check_finite(log_obs);
  const Eigen::Index total = days * bins;

  TwoStateFit fit;
  auto& m = fit.model;
  m.phi = log_obs.colwise().mean().transpose();
  const Eigen::MatrixXd resid = log_obs.rowwise() - m.phi.transpose();
  const double var = std::max(resid.squaredNorm() / static_cast<double>(total), 1e-8);
  m.a_eta = 0.99;
  m.a_mu = 0.5;
  m.sigma_eta = std::sqrt(0.01 * var);
  m.sigma_mu = std::sqrt(0.3 * var);
  m.r = 0.5 * var;
  m.pi1.setZero();
  m.Sigma1 = var * Eigen::Matrix2d::Identity();

  for (int iter = 0;; ++iter) {
    Forward f = forward(m, log_obs, true);
    if (!std::isfinite(f.log_likelihood)) throw NumericalError("two_state_fit: non-finite log-likelihood");
    fit.trace.log_likelihood.push_back(f.log_likelihood);
    if (iter > 0) {
      const double prev = fit.trace.log_likelihood[fit.trace.log_likelihood.size() - 2];
      if (f.log_likelihood - prev < options.rel_tol * std::abs(prev)) {
        fit.trace.converged = true;
        break;
      }
    }
    if (iter == options.max_iter) break;

    // RTS smoother; lag-one covariance via Cov(x_{t+1}, x_t | all) = P_{t+1|N} J_t'.
    const Eigen::Matrix2d a = transition(m);
    const auto n = static_cast<std::size_t>(total);
    std::vector<Eigen::Vector2d> xs(n);
    std::vector<Eigen::Matrix2d> ps(n), lag(n);
    xs[n - 1] = f.filt_mean[n - 1];
    ps[n - 1] = f.filt_cov[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
      const Eigen::Matrix2d& pp = f.pred_cov[k + 1];
      const Eigen::Matrix2d j = f.filt_cov[k] * a.transpose() * pp.inverse();
      xs[k] = f.filt_mean[k] + j * (xs[k + 1] - f.pred_mean[k + 1]);
      ps[k] = f.filt_cov[k] + j * (ps[k + 1] - pp) * j.transpose();
      ps[k] = 0.5 * (ps[k] + ps[k].transpose());
      lag[k + 1] = ps[k + 1] * j.transpose();
    }

    Eigen::Array2d s11 = Eigen::Array2d::Zero(), s10 = Eigen::Array2d::Zero(), s00 = Eigen::Array2d::Zero();
    for (std::size_t t = 1; t < n; ++t) {
      for (int c = 0; c < 2; ++c) {
        s11(c) += ps[t](c, c) + xs[t](c) * xs[t](c);
        s10(c) += lag[t](c, c) + xs[t](c) * xs[t - 1](c);
        s00(c) += ps[t - 1](c, c) + xs[t - 1](c) * xs[t - 1](c);
      }
    }
    const Eigen::Array2d coef = s10 / s00;
    const Eigen::Array2d q = ((s11 - coef * s10) / static_cast<double>(n - 1)).max(kVarianceFloor);
    m.a_eta = coef(0);
    m.a_mu = coef(1);
    m.sigma_eta = std::sqrt(q(0));
    m.sigma_mu = std::sqrt(q(1));

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(bins);
    for (std::size_t tau = 0; tau < n; ++tau) {
      const auto bin = static_cast<Eigen::Index>(tau) % bins;
      phi(bin) += log_obs(static_cast<Eigen::Index>(tau) / bins, bin) - xs[tau].sum();
    }
    m.phi = phi / static_cast<double>(days);
    double r = 0.0;
    for (std::size_t tau = 0; tau < n; ++tau) {
      const auto bin = static_cast<Eigen::Index>(tau) % bins;
      const double e = log_obs(static_cast<Eigen::Index>(tau) / bins, bin) - m.phi(bin) - xs[tau].sum();
      r += e * e + ps[tau].sum();
    }
    m.r = std::max(r / static_cast<double>(n), kVarianceFloor);

    m.pi1 = xs[0];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ps[0]);
    m.Sigma1 = es.eigenvectors() * es.eigenvalues().cwiseMax(kVarianceFloor).asDiagonal() * es.eigenvectors().transpose();
    m.Sigma1 = 0.5 * (m.Sigma1 + m.Sigma1.transpose());
    fit.trace.iterations = iter + 1;
  }
  return fit;
}

Eigen::VectorXd log_to_percentages(const Eigen::VectorXd& log_values) {
  const double top = log_values.maxCoeff();
  const Eigen::VectorXd w = (log_values.array() - top).exp().matrix();
  return w * (100.0 / w.sum());
}

Eigen::MatrixXd two_state_predict(const TwoStateModel& model, const Eigen::MatrixXd& warm_log,
                                  const Eigen::MatrixXd& test_log) {
  model.validate();
  const Eigen::Index bins = model.phi.size();
  if (test_log.cols() != bins || (warm_log.rows() > 0 && warm_log.cols() != bins)) {
    throw ShapeError("two_state_predict: width differs from I");
  }
  check_finite(warm_log);
  check_finite(test_log);
  // Run the test days through the same recursion, continuing from the warm posterior.
  TwoStateModel cont = model;
  if (warm_log.rows() > 0) {
    const Forward w = forward(model, warm_log, true);
    const Eigen::Matrix2d a = transition(model);
    cont.pi1 = a * w.filt_mean.back();
    cont.Sigma1 = a * w.filt_cov.back() * a.transpose() + process_cov(model);
  }
  const Forward f = forward(cont, test_log, false);
  Eigen::MatrixXd out(test_log.rows(), bins);
  for (Eigen::Index t = 0; t < test_log.rows(); ++t) {
    out.row(t) = log_to_percentages(f.predicted_obs.segment(t * bins, bins)).transpose();
  }
  return out;
}

}  // namespace ivol
