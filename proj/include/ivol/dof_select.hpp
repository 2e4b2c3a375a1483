#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace ivol {

struct Panel;

/// Cross-validated mean squared error per candidate DOF.
struct CvCurve {
  std::vector<int> dofs;
  std::vector<double> mean_mse;
  std::vector<double> se_mse;
  int folds = 0;
  int shuffles = 0;
  std::uint64_t seed = 0;
};

struct DofSelection {
  int best_dof = 0;
  CvCurve curve;
};

/// Which curve is scored against the held-out days.
enum class ProfileFit {
  /// Projection of the training mean profile onto the rank-n spline basis,
  /// i.e. the curves an n-state model can represent. Default.
  kBasisProjection,
  /// The smoothing-spline fit S_lambda * mean itself.
  kSmoother,
};

struct DofSelectConfig {
  std::vector<int> candidates = default_candidates(30);
  int n_shuffles = 5;
  int n_folds = 5;
  double split_frac = 0.8;
  std::uint64_t seed = 0;
  ProfileFit scoring = ProfileFit::kBasisProjection;

  /// {2, ..., max_dof}
  static std::vector<int> default_candidates(int max_dof);
};

/// Row indices of one (shuffle, fold) resample; both sorted, disjoint, covering 0..T-1.
struct Resample {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

Resample make_resample(Eigen::Index rows, double split_frac, std::uint64_t seed, int shuffle, int fold);

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Smallest DOF whose mean MSE is within one standard error of the minimum.
/// `abs_tol` widens the threshold to absorb rounding in exact-fit cases.
int one_se_rule(const CvCurve& curve, double abs_tol = 0.0);

/// Repeated shuffled cross-validation over whole days (rows of `rows`).
DofSelection select_dof(const Eigen::MatrixXd& rows, const DofSelectConfig& config);
DofSelection select_dof(const Panel& train, const DofSelectConfig& config);

/// CSV with header dof,mean_mse,se_mse.
void write_cv_curve(std::ostream& out, const CvCurve& curve);

}  // namespace ivol
