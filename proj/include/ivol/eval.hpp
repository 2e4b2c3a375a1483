#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ivol {

struct Date;

/// One predicted bin of one test day.
struct PredictionRecord {
  std::string symbol;
  std::string model;
  Eigen::Index day = 0;  // row index in the full panel
  std::string date;      // ISO date of that row
  Eigen::Index bin = 0;
  double p_true = 0.0;
  double p_pred = 0.0;
};

double abs_error(const PredictionRecord& r);

/// Mean absolute difference of percentages (not a relative error).
/// Throws EmptyInputError on no records.
double mape(std::span<const PredictionRecord> records);

/// Fraction of records with abs_error <= p_true versus the rest.
struct Census {
  double in_corner = 0.0;
  double outside = 0.0;
  std::size_t count = 0;
};
Census error_bound_census(std::span<const PredictionRecord> records);

struct ScatterPoint {
  double p_true = 0.0;
  double abs_error = 0.0;
};
/// Uniform reservoir sample of at most `cap` points, deterministic in `seed`.
std::vector<ScatterPoint> reservoir_scatter(std::span<const PredictionRecord> records, std::size_t cap,
                                            std::uint64_t seed);

/// Pearson correlation between the columns of `series` (rows are time).
/// Pairs involving a constant column are marked undefined and hold 0.
struct CorrelationMatrix {
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};
CorrelationMatrix state_correlation(const Eigen::MatrixXd& series);

/// Eigenvalues of a symmetric matrix in descending order.
/// Throws DomainError when asymmetric beyond 1e-8.
Eigen::VectorXd gamma_eigenvalues(const Eigen::MatrixXd& gamma);

/// Records for test rows [first_day, first_day + pred.rows()) of a panel.
std::vector<PredictionRecord> make_records(const std::string& symbol, const std::string& model,
                                           Eigen::Index first_day, const std::vector<Date>& dates,
                                           const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

/// CSV: symbol,model,day,date,bin,p_true,p_pred
void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);

void write_correlation(std::ostream& out, const CorrelationMatrix& corr);
void write_scatter(std::ostream& out, std::span<const ScatterPoint> points);

}  // namespace ivol
