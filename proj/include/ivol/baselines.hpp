#pragma once

#include <Eigen/Dense>

#include "ivol/kalman.hpp"

namespace ivol {

/// Rolling mean over the same bin of previous days.
struct RmConfig {
  int window = 20;
};

/// Percentage prediction for day `t` from rows [max(0, t - window), t).
/// Throws BoundsError when t == 0 (no history) or t > rows.
Eigen::VectorXd rm_predict(const Eigen::MatrixXd& percentages, const RmConfig& config, Eigen::Index t);

/// rm_predict for every day in [first, rows).
Eigen::MatrixXd rm_rollout(const Eigen::MatrixXd& percentages, const RmConfig& config, Eigen::Index first);

/// Bin-level two-state model on log volume, global index tau = t * I + i:
///   [eta, mu]_{tau+1} = diag(a_eta, a_mu) [eta, mu]_tau + q,  q ~ N(0, diag(sigma_eta^2, sigma_mu^2))
///   y_tau = eta_tau + mu_tau + phi_{i(tau)} + v,               v ~ N(0, r)
struct TwoStateModel {
  double a_eta = 0.0;
  double a_mu = 0.0;
  double sigma_eta = 0.0;
  double sigma_mu = 0.0;
  double r = 0.0;
  Eigen::VectorXd phi;  // seasonality, length I
  Eigen::Vector2d pi1 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d Sigma1 = Eigen::Matrix2d::Identity();

  void validate() const;
};

struct TwoStateFilterResult {
  Eigen::VectorXd predicted_obs;  // one-step prediction of every observed bin, flattened
  double log_likelihood = 0.0;
  Eigen::Vector2d final_mean;
  Eigen::Matrix2d final_cov;
};

/// Forward pass over rows of `log_obs` (days x I).
TwoStateFilterResult two_state_filter(const TwoStateModel& model, const Eigen::MatrixXd& log_obs);

struct TwoStateFit {
  TwoStateModel model;
  EmTrace trace;
};

/// EM with closed-form M-step for every parameter. Inputs must be finite.
TwoStateFit two_state_fit(const Eigen::MatrixXd& log_obs, const EmOptions& options = {});

/// One-step-ahead bin predictions over `test_log` after filtering through
/// `warm_log`, exponentiated and normalised to per-day percentages.
Eigen::MatrixXd two_state_predict(const TwoStateModel& model, const Eigen::MatrixXd& warm_log,
                                  const Eigen::MatrixXd& test_log);

/// 100 * exp(row) / sum(exp(row)), evaluated stably.
Eigen::VectorXd log_to_percentages(const Eigen::VectorXd& log_values);

}  // namespace ivol
