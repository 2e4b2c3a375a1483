#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ivol/errors.hpp"
#include "ivol/eval.hpp"
#include "ivol/ingest.hpp"
#include "ivol/random.hpp"

using namespace ivol;

namespace {

PredictionRecord rec(double p_true, double p_pred) { return {"S", "m", 0, "2017-01-03", 0, p_true, p_pred}; }

// Real roots of the characteristic cubic of a symmetric 3x3 matrix, descending.
std::vector<double> cubic_roots(const Eigen::Matrix3d& a) {
  const double c2 = -a.trace();
  const double c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - a(0, 1) * a(1, 0) -
                    a(0, 2) * a(2, 0) - a(1, 2) * a(2, 1);
  const double c0 = -a.determinant();
  // Depressed cubic t^3 + p t + q with x = t - c2/3; trigonometric form (three real roots).
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double m = 2.0 * std::sqrt(-p / 3.0);
  const double theta = std::acos(std::clamp(3.0 * q / (p * m), -1.0, 1.0)) / 3.0;
  std::vector<double> r;
  for (int k = 0; k < 3; ++k) r.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - c2 / 3.0);
  std::sort(r.rbegin(), r.rend());
  return r;
}

}  // namespace

TEST(Eval, MapeExamples) {
  std::vector<PredictionRecord> exact{rec(1.0, 1.0), rec(2.5, 2.5)};
  EXPECT_EQ(mape(exact), 0.0);
  EXPECT_NEAR(mape(std::vector{rec(1.0, 1.1), rec(1.0, 0.8), rec(2.0, 2.6)}), 0.3, 1e-12);
  // Dyadic values keep the arithmetic exact.
  std::vector<PredictionRecord> shifted;
  for (int k = 0; k < 64; ++k) shifted.push_back(rec(k / 64.0, k / 64.0 + 0.25));
  EXPECT_EQ(mape(shifted), 0.25);
  EXPECT_THROW(mape(std::vector<PredictionRecord>{}), EmptyInputError);
}

TEST(Eval, AbsError) {
  EXPECT_EQ(abs_error(rec(1.0, 1.0)), 0.0);
  EXPECT_EQ(abs_error(rec(1.0, 2.0)), 1.0);
  EXPECT_NEAR(abs_error(rec(1.282, 0.9)), 0.382, 1e-12);
}

TEST(Eval, CensusMatchesBruteForce) {
  EXPECT_EQ(error_bound_census(std::vector{rec(1, 1), rec(2, 2)}).in_corner, 1.0);
  EXPECT_EQ(error_bound_census(std::vector{rec(1.0, 2.5)}).in_corner, 0.0);
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<PredictionRecord> rs;
    int inside = 0;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * rng.uniform(), p = 4.0 * rng.uniform();
      rs.push_back(rec(t, p));
      inside += std::abs(p - t) <= t ? 1 : 0;
    }
    const Census c = error_bound_census(rs);
    EXPECT_EQ(c.in_corner, static_cast<double>(inside) / n);
    EXPECT_EQ(c.in_corner + c.outside, 1.0);
    EXPECT_EQ(c.count, static_cast<std::size_t>(n));
  }
}

TEST(Eval, ReservoirIsCappedAndDeterministic) {
  std::vector<PredictionRecord> rs;
  for (int k = 0; k < 1000; ++k) rs.push_back(rec(k, k + 1.0));
  const auto a = reservoir_scatter(rs, 100, 5);
  const auto b = reservoir_scatter(rs, 100, 5);
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].p_true, b[k].p_true);
  EXPECT_EQ(reservoir_scatter(rs, 5000, 5).size(), 1000u);
  // Roughly uniform: the mean index of the sample is near the middle.
  double mean = 0.0;
  for (const auto& p : reservoir_scatter(rs, 500, 9)) mean += p.p_true / 500.0;
  EXPECT_NEAR(mean, 499.5, 40.0);
}

TEST(Eval, StateCorrelation) {
  Rng rng(2);
  Eigen::MatrixXd same(50, 3);
  const Eigen::VectorXd x = rng.normal_vector(50);
  same << x, x, x;
  const auto c = state_correlation(same);
  EXPECT_LT((c.values - Eigen::MatrixXd::Ones(3, 3)).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::MatrixXd neg(50, 2);
  neg << x, -x;
  EXPECT_NEAR(state_correlation(neg).values(0, 1), -1.0, 1e-12);

  Eigen::MatrixXd indep(10000, 3);
  for (int k = 0; k < 3; ++k) indep.col(k) = rng.normal_vector(10000);
  const auto ci = state_correlation(indep);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(ci.values(a, a), 1.0);
    for (int b = 0; b < 3; ++b) {
      EXPECT_EQ(ci.values(a, b), ci.values(b, a));
      if (a != b) EXPECT_LT(std::abs(ci.values(a, b)), 0.05);
    }
  }

  Eigen::MatrixXd flat(20, 2);
  flat << rng.normal_vector(20), Eigen::VectorXd::Constant(20, 3.0);
  const auto cf = state_correlation(flat);
  EXPECT_TRUE(cf.defined(0, 0));
  EXPECT_FALSE(cf.defined(0, 1));
  EXPECT_FALSE(cf.defined(1, 1));
}

TEST(Eval, GammaEigenvalues) {
  EXPECT_TRUE(gamma_eigenvalues(Eigen::MatrixXd::Identity(4, 4)).isApproxToConstant(1.0));
  const Eigen::VectorXd d = gamma_eigenvalues(Eigen::Vector3d(0, 3, 0).asDiagonal().toDenseMatrix());
  EXPECT_EQ(d(0), 3.0);
  EXPECT_EQ(d(1), 0.0);
  EXPECT_EQ(d(2), 0.0);
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
    const Eigen::Matrix3d g = a * a.transpose();
    const Eigen::VectorXd ev = gamma_eigenvalues(g);
    const auto roots = cubic_roots(g);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(ev(k), roots[static_cast<std::size_t>(k)], 1e-9 * (1.0 + g.norm()));
  }
  Eigen::Matrix2d bad;
  bad << 1, 0.1, 0, 1;
  EXPECT_THROW(gamma_eigenvalues(bad), DomainError);
}

TEST(Eval, PredictionFilesRoundTrip) {
  const std::vector<Date> dates{{2017, 1, 3}, {2017, 1, 4}, {2017, 1, 5}};
  Eigen::MatrixXd truth(2, 2), pred(2, 2);
  truth << 40, 60, 55.5, 44.5;
  pred << 1.0 / 3.0, 100.0 - 1.0 / 3.0, 50, 50;
  const auto recs = make_records("ABC", "rm", 1, dates, truth, pred);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[2].date, "2017-01-05");
  EXPECT_EQ(recs[2].day, 2);
  std::stringstream io;
  write_predictions(io, recs);
  const auto back = read_predictions(io);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].p_pred, recs[k].p_pred);
    EXPECT_EQ(back[k].bin, recs[k].bin);
    EXPECT_EQ(back[k].model, "rm");
  }
  EXPECT_THROW(make_records("ABC", "rm", 2, dates, truth, pred), BoundsError);
}
