#include "ivol/kalman.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ivol/errors.hpp"
#include "ivol/linalg.hpp"

namespace ivol {
namespace {

constexpr double kMaxCondition = 1e14;

bool is_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

void check_cov(const Eigen::MatrixXd& m, const char* name) {
  if (linalg::max_asymmetry(m) > 1e-10) throw DomainError(std::string(name) + " is not symmetric");
  if (linalg::min_eigenvalue(m) < -1e-10) throw DomainError(std::string(name) + " is not positive semidefinite");
}

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= 1.0 / kMaxCondition)) {
    throw ConditioningError(std::string(what) + " is numerically singular");
  }
  return llt;
}

}  // namespace

void StateSpaceModel::validate() const {
  const Eigen::Index n = B.rows();
  const Eigen::Index obs = D.rows();
  if (n < 1 || B.cols() != n) throw ShapeError("B must be square and non-empty");
  if (D.cols() != n || obs < 1) throw ShapeError("D must be I x n");
  if (Gamma.rows() != n || Gamma.cols() != n) throw ShapeError("Gamma must be n x n");
  if (Psi.rows() != obs || Psi.cols() != obs) throw ShapeError("Psi must be I x I");
  if (pi1.size() != n) throw ShapeError("pi1 must have length n");
  if (Sigma1.rows() != n || Sigma1.cols() != n) throw ShapeError("Sigma1 must be n x n");
  check_cov(Gamma, "Gamma");
  check_cov(Psi, "Psi");
  check_cov(Sigma1, "Sigma1");
}

KalmanFilter::KalmanFilter(const StateSpaceModel& model)
    : model_(model), mean_(model.pi1), cov_(model.Sigma1), diagonal_psi_(is_diagonal(model.Psi)) {}

void KalmanFilter::predict() {
  if (at_prior_) {
    at_prior_ = false;
    return;
  }
  mean_ = model_.B * mean_;
  cov_ = linalg::symmetrize(model_.B * cov_ * model_.B.transpose() + model_.Gamma);
}

KalmanFilter::Update KalmanFilter::update(const Eigen::VectorXd& y) {
  const auto& D = model_.D;
  if (y.size() != D.rows()) throw ShapeError("observation length differs from I");
  at_prior_ = false;

  const Eigen::MatrixXd dp = D * cov_;  // I x n
  Eigen::MatrixXd f = dp * D.transpose();
  if (diagonal_psi_) {
    f.diagonal() += model_.Psi.diagonal();
  } else {
    f += model_.Psi;
  }
  f = linalg::symmetrize(f);
  const auto llt = factor_or_throw(f, "innovation covariance");

  Update out;
  out.innovation = y - D * mean_;
  out.gain = llt.solve(dp).transpose();  // S D' F^-1
  const Eigen::VectorXd white = llt.matrixL().solve(out.innovation);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.log_likelihood =
      -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());

  mean_ += out.gain * out.innovation;
  // Joseph form keeps the update positive semidefinite.
  Eigen::MatrixXd a = -out.gain * D;
  a.diagonal().array() += 1.0;
  Eigen::MatrixXd next = a * cov_ * a.transpose();
  if (diagonal_psi_) {
    next += out.gain * model_.Psi.diagonal().asDiagonal() * out.gain.transpose();
  } else {
    next += out.gain * model_.Psi * out.gain.transpose();
  }
  cov_ = linalg::enforce_psd(next);
  out.innovation_cov = std::move(f);
  return out;
}

FilterResult kf_filter(const StateSpaceModel& model, const Eigen::MatrixXd& observations) {
  model.validate();
  if (observations.cols() != model.obs_dim()) throw ShapeError("observation width differs from I");
  if (observations.rows() < 1) throw ShapeError("kf_filter needs at least one observation");
  const auto days = static_cast<std::size_t>(observations.rows());

  FilterResult out;
  out.predicted_mean.reserve(days);
  out.predicted_cov.reserve(days);
  out.filtered_mean.reserve(days);
  out.filtered_cov.reserve(days);
  out.gain.reserve(days);
  out.innovation.reserve(days);
  out.innovation_cov.reserve(days);

  KalmanFilter filter(model);
  for (Eigen::Index t = 0; t < observations.rows(); ++t) {
    filter.predict();
    out.predicted_mean.push_back(filter.mean());
    out.predicted_cov.push_back(filter.cov());
    auto step = filter.update(observations.row(t).transpose());
    out.filtered_mean.push_back(filter.mean());
    out.filtered_cov.push_back(filter.cov());
    out.gain.push_back(std::move(step.gain));
    out.innovation.push_back(std::move(step.innovation));
    out.innovation_cov.push_back(std::move(step.innovation_cov));
    out.log_likelihood += step.log_likelihood;
  }
  return out;
}

SmoothResult kf_smooth(const StateSpaceModel& model, const FilterResult& fr) {
  const std::size_t days = fr.length();
  if (days == 0) throw ShapeError("kf_smooth needs a non-empty filter result");
  const Eigen::Index n = model.state_dim();
  const auto& B = model.B;

  SmoothResult out;
  out.smoothed_mean.resize(days);
  out.smoothed_cov.resize(days);
  out.lag_one_cov.resize(days);
  out.gain.resize(days - 1);
  out.smoothed_mean[days - 1] = fr.filtered_mean[days - 1];
  out.smoothed_cov[days - 1] = fr.filtered_cov[days - 1];

  for (std::size_t k = days - 1; k-- > 0;) {
    const auto llt = factor_or_throw(fr.predicted_cov[k + 1], "predicted state covariance");
    // J = S_{t|t} B' S_{t+1|t}^-1 = (S_{t+1|t}^-1 B S_{t|t})'
    out.gain[k] = llt.solve(B * fr.filtered_cov[k]).transpose();
    const auto& j = out.gain[k];
    out.smoothed_mean[k] = fr.filtered_mean[k] + j * (out.smoothed_mean[k + 1] - fr.predicted_mean[k + 1]);
    out.smoothed_cov[k] = linalg::enforce_psd(
        fr.filtered_cov[k] + j * (out.smoothed_cov[k + 1] - fr.predicted_cov[k + 1]) * j.transpose());
  }

  if (days >= 2) {
    const std::size_t last = days - 1;
    Eigen::MatrixXd a = -fr.gain[last] * model.D;
    a.diagonal().array() += 1.0;
    out.lag_one_cov[last] = a * B * fr.filtered_cov[last - 1];
    for (std::size_t t = last; t >= 2; --t) {
      // Cov(X_{t-1}, X_{t-2} | all)
      out.lag_one_cov[t - 1] =
          fr.filtered_cov[t - 1] * out.gain[t - 2].transpose() +
          out.gain[t - 1] * (out.lag_one_cov[t] - B * fr.filtered_cov[t - 1]) * out.gain[t - 2].transpose();
    }
  }
  out.lag_one_cov[0] = Eigen::MatrixXd(0, 0);
  (void)n;
  return out;
}

double EmTrace::max_decrease() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < log_likelihood.size(); ++k) {
    worst = std::max(worst, log_likelihood[k - 1] - log_likelihood[k]);
  }
  return worst;
}

EmResult em_fit(const StateSpaceModel& init, const Eigen::MatrixXd& observations, const EmOptions& options) {
  init.validate();
  const Eigen::Index days = observations.rows();
  if (days < 2) throw InsufficientDataError("em_fit needs at least two days");
  if (options.max_iter < 0) throw DomainError("max_iter must be non-negative");
  const Eigen::Index n = init.state_dim();
  const Eigen::Index obs = init.obs_dim();
  const auto& D = init.D;

  EmResult result{init, {}};
  auto& model = result.model;
  auto& trace = result.trace;

  for (int iter = 0;; ++iter) {
    const FilterResult fr = kf_filter(model, observations);
    if (!std::isfinite(fr.log_likelihood)) throw NumericalError("em_fit: non-finite log-likelihood");
    trace.log_likelihood.push_back(fr.log_likelihood);
    if (iter > 0) {
      const double prev = trace.log_likelihood[trace.log_likelihood.size() - 2];
      if (fr.log_likelihood - prev < options.rel_tol * std::abs(prev)) {
        trace.converged = true;
        break;
      }
    }
    if (iter == options.max_iter) break;

    const SmoothResult sr = kf_smooth(model, fr);
    const auto& x = sr.smoothed_mean;
    const auto& p = sr.smoothed_cov;

    Eigen::MatrixXd s11 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd s10 = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd s00 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index t = 1; t < days; ++t) {
      const auto tt = static_cast<std::size_t>(t);
      s11 += p[tt] + x[tt] * x[tt].transpose();
      s10 += sr.lag_one_cov[tt] + x[tt] * x[tt - 1].transpose();
      s00 += p[tt - 1] + x[tt - 1] * x[tt - 1].transpose();
    }
    s00 = linalg::symmetrize(s00);
    const auto s00_llt = factor_or_throw(s00, "EM state second moment");
    model.B = s00_llt.solve(s10.transpose()).transpose();

    const Eigen::MatrixXd gamma_raw = (s11 - model.B * s10.transpose()) / static_cast<double>(days - 1);
    const Eigen::MatrixXd gamma_sym = linalg::symmetrize(gamma_raw);
    const double scale = std::max(1.0, gamma_sym.cwiseAbs().maxCoeff());
    if (linalg::min_eigenvalue(gamma_sym) < -1e-6 * scale) throw NumericalError("em_fit: transition covariance update is indefinite");
    model.Gamma = linalg::enforce_psd(gamma_sym);

    if (options.diagonal_psi) {
      Eigen::VectorXd psi = Eigen::VectorXd::Zero(obs);
      for (Eigen::Index t = 0; t < days; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        const Eigen::VectorXd resid = observations.row(t).transpose() - D * x[tt];
        const Eigen::MatrixXd dp = D * p[tt];
        psi += resid.cwiseAbs2() + (dp.array() * D.array()).rowwise().sum().matrix();
      }
      psi /= static_cast<double>(days);
      model.Psi = psi.cwiseMax(linalg::kEigenFloor).asDiagonal();
    } else {
      Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(obs, obs);
      for (Eigen::Index t = 0; t < days; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        const Eigen::VectorXd resid = observations.row(t).transpose() - D * x[tt];
        psi += resid * resid.transpose() + D * p[tt] * D.transpose();
      }
      model.Psi = linalg::enforce_psd(psi / static_cast<double>(days));
    }

    model.pi1 = x[0];
    model.Sigma1 = linalg::enforce_psd(p[0]);
    trace.iterations = iter + 1;
  }
  return result;
}

Eigen::VectorXd predict_day(const StateSpaceModel& model, const Eigen::VectorXd& state_mean) {
  if (state_mean.size() != model.D.cols()) throw ShapeError("state length differs from n");
  return model.D * state_mean;
}

Eigen::VectorXd to_percentages(const Eigen::VectorXd& curve) {
  Eigen::VectorXd c = curve.cwiseMax(0.0);
  const double total = c.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    return Eigen::VectorXd::Constant(curve.size(), 100.0 / static_cast<double>(curve.size()));
  }
  return c * (100.0 / total);
}

Eigen::MatrixXd rollout_predict(const StateSpaceModel& model, const Eigen::MatrixXd& warm, const Eigen::MatrixXd& test) {
  model.validate();
  if ((warm.rows() > 0 && warm.cols() != model.obs_dim()) || test.cols() != model.obs_dim()) {
    throw ShapeError("rollout_predict: panel width differs from I");
  }
  KalmanFilter filter(model);
  for (Eigen::Index t = 0; t < warm.rows(); ++t) {
    filter.predict();
    filter.update(warm.row(t).transpose());
  }
  Eigen::MatrixXd out(test.rows(), test.cols());
  for (Eigen::Index t = 0; t < test.rows(); ++t) {
    filter.predict();
    out.row(t) = to_percentages(predict_day(model, filter.mean())).transpose();
    filter.update(test.row(t).transpose());
  }
  return out;
}

StateSpaceModel initial_model(const Eigen::MatrixXd& D, const Eigen::VectorXd& first_day) {
  if (first_day.size() != D.rows()) throw ShapeError("first day length differs from I");
  const Eigen::Index n = D.cols();
  const Eigen::Index obs = D.rows();
  StateSpaceModel m;
  m.B = Eigen::MatrixXd::Identity(n, n);
  m.D = D;
  m.Gamma = Eigen::MatrixXd::Identity(n, n);
  m.Psi = Eigen::MatrixXd::Identity(obs, obs);
  m.pi1 = D.colPivHouseholderQr().solve(first_day);
  m.Sigma1 = Eigen::MatrixXd::Identity(n, n);
  return m;
}

}  // namespace ivol
