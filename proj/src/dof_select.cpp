#include "ivol/dof_select.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "ivol/errors.hpp"
#include "ivol/ingest.hpp"
#include "ivol/random.hpp"
#include "ivol/spline.hpp"
#include "ivol/text.hpp"

namespace ivol {

std::vector<int> DofSelectConfig::default_candidates(int max_dof) {
  std::vector<int> out;
  for (int d = 2; d <= max_dof; ++d) out.push_back(d);
  return out;
}

Resample make_resample(Eigen::Index rows, double split_frac, std::uint64_t seed, int shuffle, int fold) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(shuffle), static_cast<std::uint64_t>(fold)}));
  const auto perm = rng.permutation(static_cast<std::size_t>(rows));
  auto n_train = static_cast<Eigen::Index>(std::lround(split_frac * static_cast<double>(rows)));
  n_train = std::clamp<Eigen::Index>(n_train, 1, rows - 1);
  Resample r;
  for (Eigen::Index k = 0; k < rows; ++k) {
    (k < n_train ? r.train : r.test).push_back(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)]));
  }
  std::sort(r.train.begin(), r.train.end());
  std::sort(r.test.begin(), r.test.end());
  return r;
}

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size()) throw ShapeError("mse: length mismatch");
  if (y.size() == 0) throw ShapeError("mse: empty input");
  return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

int one_se_rule(const CvCurve& curve, double abs_tol) {
  if (curve.dofs.empty()) throw EmptyInputError("one_se_rule: empty curve");
  if (curve.mean_mse.size() != curve.dofs.size() || curve.se_mse.size() != curve.dofs.size()) {
    throw ShapeError("one_se_rule: curve arrays differ in length");
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < curve.dofs.size(); ++k) {
    if (curve.mean_mse[k] < curve.mean_mse[best]) best = k;
  }
  const double threshold = curve.mean_mse[best] + curve.se_mse[best] + abs_tol;
  int chosen = curve.dofs[best];
  for (std::size_t k = 0; k < curve.dofs.size(); ++k) {
    if (curve.mean_mse[k] <= threshold) chosen = std::min(chosen, curve.dofs[k]);
  }
  return chosen;
}

DofSelection select_dof(const Eigen::MatrixXd& rows, const DofSelectConfig& config) {
  const Eigen::Index days = rows.rows();
  const Eigen::Index bins = rows.cols();
  if (days < 10) throw InsufficientDataError("select_dof needs at least 10 days, got " + std::to_string(days));
  if (config.candidates.empty()) throw EmptyInputError("select_dof: no candidate DOFs");
  if (config.n_shuffles < 1 || config.n_folds < 1) throw DomainError("select_dof: shuffles and folds must be >= 1");
  if (!(config.split_frac > 0.0 && config.split_frac < 1.0)) throw DomainError("select_dof: split_frac must be in (0, 1)");
  for (int d : config.candidates) {
    if (d < 2 || d > bins) throw DomainError("candidate DOF " + std::to_string(d) + " outside [2, I]");
  }
  std::vector<int> dofs = config.candidates;
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());

  // The operator for each DOF depends only on (DOF, I), so build it once.
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(bins);
  std::vector<Eigen::MatrixXd> operators;
  operators.reserve(dofs.size());
  for (int d : dofs) {
    const auto fit = spline::fit_spline(zeros, static_cast<double>(d));
    operators.push_back(config.scoring == ProfileFit::kSmoother
                            ? fit.smoother
                            : Eigen::MatrixXd(fit.directions * fit.directions.transpose()));
  }

  const int resamples = config.n_shuffles * config.n_folds;
  Eigen::MatrixXd fold_mse(static_cast<Eigen::Index>(dofs.size()), resamples);
  int col = 0;
  for (int s = 0; s < config.n_shuffles; ++s) {
    for (int j = 0; j < config.n_folds; ++j, ++col) {
      const Resample r = make_resample(days, config.split_frac, config.seed, s, j);
      Eigen::VectorXd profile = Eigen::VectorXd::Zero(bins);
      for (auto t : r.train) profile += rows.row(t).transpose();
      profile /= static_cast<double>(r.train.size());
      for (std::size_t k = 0; k < dofs.size(); ++k) {
        const Eigen::VectorXd curve = operators[k] * profile;
        double total = 0.0;
        for (auto t : r.test) total += (rows.row(t).transpose() - curve).squaredNorm();
        fold_mse(static_cast<Eigen::Index>(k), col) =
            total / static_cast<double>(r.test.size() * static_cast<std::size_t>(bins));
      }
    }
  }

  DofSelection out;
  out.curve.dofs = dofs;
  out.curve.folds = config.n_folds;
  out.curve.shuffles = config.n_shuffles;
  out.curve.seed = config.seed;
  for (Eigen::Index k = 0; k < fold_mse.rows(); ++k) {
    const double mean = fold_mse.row(k).mean();
    double se = 0.0;
    if (resamples > 1) {
      const double var = (fold_mse.row(k).array() - mean).square().sum() / static_cast<double>(resamples - 1);
      se = std::sqrt(var / static_cast<double>(resamples));
    }
    out.curve.mean_mse.push_back(mean);
    out.curve.se_mse.push_back(se);
  }
  // Rounding allowance so exact-fit ties (e.g. linear profiles) resolve to the smallest DOF.
  const double scale = rows.squaredNorm() / static_cast<double>(rows.size());
  out.best_dof = one_se_rule(out.curve, 1e-12 * scale);
  return out;
}

DofSelection select_dof(const Panel& train, const DofSelectConfig& config) { return select_dof(train.values, config); }

void write_cv_curve(std::ostream& out, const CvCurve& curve) {
  out << "dof,mean_mse,se_mse\n";
  for (std::size_t k = 0; k < curve.dofs.size(); ++k) {
    out << curve.dofs[k] << ',' << text::format_double(curve.mean_mse[k]) << ','
        << text::format_double(curve.se_mse[k]) << '\n';
  }
}

}  // namespace ivol
