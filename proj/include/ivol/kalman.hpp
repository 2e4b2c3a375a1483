#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ivol {

/// Time-invariant linear-Gaussian state-space model
///   X_{t+1} = B X_t + gamma,   gamma ~ N(0, Gamma)
///   Y_t     = D X_t + psi,     psi   ~ N(0, Psi)
/// with X_1 ~ N(pi1, Sigma1). State dimension n, observation dimension I.
struct StateSpaceModel {
  Eigen::MatrixXd B;       // n x n
  Eigen::MatrixXd D;       // I x n
  Eigen::MatrixXd Gamma;   // n x n
  Eigen::MatrixXd Psi;     // I x I
  Eigen::VectorXd pi1;     // n
  Eigen::MatrixXd Sigma1;  // n x n

  Eigen::Index state_dim() const { return B.rows(); }
  Eigen::Index obs_dim() const { return D.rows(); }

  /// Throws ShapeError on inconsistent dimensions and DomainError when a
  /// covariance is not symmetric within 1e-10 or has an eigenvalue below -1e-10.
  void validate() const;
};

/// Per-day output of the forward pass. Index t is day t (0-based); the
/// prediction for day 0 is the prior (pi1, Sigma1).
struct FilterResult {
  std::vector<Eigen::VectorXd> predicted_mean;  // X_{t|t-1}
  std::vector<Eigen::MatrixXd> predicted_cov;   // S_{t|t-1}
  std::vector<Eigen::VectorXd> filtered_mean;   // X_{t|t}
  std::vector<Eigen::MatrixXd> filtered_cov;    // S_{t|t}
  std::vector<Eigen::MatrixXd> gain;            // K_t, n x I
  std::vector<Eigen::VectorXd> innovation;      // Y_t - D X_{t|t-1}
  std::vector<Eigen::MatrixXd> innovation_cov;  // D S_{t|t-1} D' + Psi
  double log_likelihood = 0.0;

  std::size_t length() const { return filtered_mean.size(); }
};

struct SmoothResult {
  std::vector<Eigen::VectorXd> smoothed_mean;  // X_{t|T}
  std::vector<Eigen::MatrixXd> smoothed_cov;   // S_{t|T}
  /// Cov(X_t, X_{t-1} | all data); entry 0 is an empty matrix.
  std::vector<Eigen::MatrixXd> lag_one_cov;
  /// J_t = S_{t|t} B' S_{t+1|t}^{-1}, for t = 0..T-2.
  std::vector<Eigen::MatrixXd> gain;
};

/// One-step filter over a model; owns the running posterior.
class KalmanFilter {
 public:
  explicit KalmanFilter(const StateSpaceModel& model);

  /// Advances the posterior through the transition. The first call after
  /// construction is a no-op because the prior already describes day 0.
  void predict();

  struct Update {
    Eigen::MatrixXd gain;
    Eigen::VectorXd innovation;
    Eigen::MatrixXd innovation_cov;
    double log_likelihood = 0.0;
  };
  Update update(const Eigen::VectorXd& y);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  StateSpaceModel model_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  bool at_prior_ = true;
  bool diagonal_psi_ = false;
};

/// Rows of `observations` are the days. Throws ShapeError or ConditioningError.
FilterResult kf_filter(const StateSpaceModel& model, const Eigen::MatrixXd& observations);

/// Rauch-Tung-Striebel smoother with the lag-one covariance recursion.
SmoothResult kf_smooth(const StateSpaceModel& model, const FilterResult& filtered);

struct EmOptions {
  int max_iter = 200;
  double rel_tol = 1e-6;
  /// Zero the off-diagonal of Psi after each M-step.
  bool diagonal_psi = true;
};

struct EmTrace {
  /// Innovation log-likelihood of the model entering each iteration.
  std::vector<double> log_likelihood;
  int iterations = 0;  // M-steps performed
  bool converged = false;

  /// Largest drop between consecutive entries (0 if the trace never decreases).
  double max_decrease() const;
};

struct EmResult {
  StateSpaceModel model;
  EmTrace trace;
};

/// EM for B, Gamma, Psi, pi1 and Sigma1 with D held fixed.
/// Throws NumericalError on a non-finite likelihood or an unrepairable covariance.
EmResult em_fit(const StateSpaceModel& init, const Eigen::MatrixXd& observations, const EmOptions& options = {});

/// D * state_mean.
Eigen::VectorXd predict_day(const StateSpaceModel& model, const Eigen::VectorXd& state_mean);

/// Clamps negatives to zero and rescales to sum to 100 (uniform if nothing is left).
Eigen::VectorXd to_percentages(const Eigen::VectorXd& curve);

/// Day-ahead percentage curves for every row of `test`: filter through `warm`,
/// then for each test day predict D B X_{t-1|t-1} before updating with that day.
Eigen::MatrixXd rollout_predict(const StateSpaceModel& model, const Eigen::MatrixXd& warm, const Eigen::MatrixXd& test);

/// Starting point for EM: B, Gamma, Psi, Sigma1 identity and pi1 the
/// least-squares solution of D pi1 = first_day.
StateSpaceModel initial_model(const Eigen::MatrixXd& D, const Eigen::VectorXd& first_day);

}  // namespace ivol
