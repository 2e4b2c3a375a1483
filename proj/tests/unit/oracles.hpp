#pragma once

// Dense reference computations used to cross-check the production code.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ivol/kalman.hpp"

namespace oracle {

// Smoother matrix of the natural cubic spline on x = 1..I from the dense
// penalty K = Q R^{-1} Q', S = (I + lambda K)^{-1}.
inline Eigen::MatrixXd spline_smoother(double lambda, Eigen::Index bins) {
  const Eigen::Index m = bins - 2;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(bins, m);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    q(j, j) = 1.0;
    q(j + 1, j) = -2.0;
    q(j + 2, j) = 1.0;
    r(j, j) = 2.0 / 3.0;
    if (j + 1 < m) r(j, j + 1) = r(j + 1, j) = 1.0 / 6.0;
  }
  const Eigen::MatrixXd k = q * r.ldlt().solve(q.transpose());
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(bins, bins) + lambda * k;
  return a.fullPivLu().inverse();
}

// Joint Gaussian of (X_1..X_T, Y_1..Y_T) for a state-space model.
struct Joint {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::Index n = 0, p = 0, T = 0;

  Eigen::Index x(Eigen::Index t) const { return t * n; }
  Eigen::Index y(Eigen::Index t) const { return T * n + t * p; }
};

inline Joint joint(const ivol::StateSpaceModel& m, Eigen::Index T) {
  Joint j;
  j.n = m.state_dim();
  j.p = m.obs_dim();
  j.T = T;
  const Eigen::Index n = j.n, p = j.p;
  const Eigen::Index size = T * (n + p);
  j.mean = Eigen::VectorXd::Zero(size);
  j.cov = Eigen::MatrixXd::Zero(size, size);
  // State block.
  std::vector<Eigen::MatrixXd> var(T);
  std::vector<Eigen::VectorXd> mu(T);
  var[0] = m.Sigma1;
  mu[0] = m.pi1;
  for (Eigen::Index t = 1; t < T; ++t) {
    var[t] = m.B * var[t - 1] * m.B.transpose() + m.Gamma;
    mu[t] = m.B * mu[t - 1];
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    j.mean.segment(j.x(t), n) = mu[t];
    Eigen::MatrixXd c = var[t];  // Cov(X_s, X_t) for s = t, t+1, ...
    for (Eigen::Index s = t; s < T; ++s) {
      j.cov.block(j.x(s), j.x(t), n, n) = c;
      j.cov.block(j.x(t), j.x(s), n, n) = c.transpose();
      c = m.B * c;
    }
  }
  // Observation blocks.
  const Eigen::MatrixXd xx = j.cov.topLeftCorner(T * n, T * n);
  Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(T * p, T * n);
  for (Eigen::Index t = 0; t < T; ++t) dd.block(t * p, t * n, p, n) = m.D;
  j.mean.tail(T * p) = dd * j.mean.head(T * n);
  j.cov.block(T * n, 0, T * p, T * n) = dd * xx;
  j.cov.block(0, T * n, T * n, T * p) = (dd * xx).transpose();
  Eigen::MatrixXd yy = dd * xx * dd.transpose();
  for (Eigen::Index t = 0; t < T; ++t) yy.block(t * p, t * p, p, p) += m.Psi;
  j.cov.bottomRightCorner(T * p, T * p) = yy;
  return j;
}

struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Distribution of the entries `a` given the entries `b` take the values `vb`.
inline Conditional condition(const Joint& j, const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b,
                             const Eigen::VectorXd& vb) {
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd saa(na, na), sab(na, nb), sbb(nb, nb);
  Eigen::VectorXd ma(na), mb(nb);
  for (Eigen::Index r = 0; r < na; ++r) {
    ma(r) = j.mean(a[r]);
    for (Eigen::Index c = 0; c < na; ++c) saa(r, c) = j.cov(a[r], a[c]);
    for (Eigen::Index c = 0; c < nb; ++c) sab(r, c) = j.cov(a[r], b[c]);
  }
  for (Eigen::Index r = 0; r < nb; ++r) {
    mb(r) = j.mean(b[r]);
    for (Eigen::Index c = 0; c < nb; ++c) sbb(r, c) = j.cov(b[r], b[c]);
  }
  Conditional out;
  if (nb == 0) {
    out.mean = ma;
    out.cov = saa;
    return out;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(sbb);
  out.mean = ma + sab * lu.solve(vb - mb);
  out.cov = saa - sab * lu.solve(sab.transpose());
  return out;
}

inline std::vector<Eigen::Index> range(Eigen::Index start, Eigen::Index count) {
  std::vector<Eigen::Index> v(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = start + k;
  return v;
}

// Indices of Y_0..Y_{last} and their stacked values.
inline std::pair<std::vector<Eigen::Index>, Eigen::VectorXd> observed(const Joint& j, const Eigen::MatrixXd& y,
                                                                      Eigen::Index last) {
  std::vector<Eigen::Index> idx;
  Eigen::VectorXd v((last + 1) * j.p);
  for (Eigen::Index t = 0; t <= last; ++t) {
    for (Eigen::Index i = 0; i < j.p; ++i) {
      idx.push_back(j.y(t) + i);
      v(t * j.p + i) = y(t, i);
    }
  }
  return {idx, v};
}

// log N(y_all) under the joint observation marginal.
inline double log_likelihood(const Joint& j, const Eigen::MatrixXd& y) {
  const auto [idx, v] = observed(j, y, j.T - 1);
  const auto nb = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd s(nb, nb);
  Eigen::VectorXd mu(nb);
  for (Eigen::Index r = 0; r < nb; ++r) {
    mu(r) = j.mean(idx[r]);
    for (Eigen::Index c = 0; c < nb; ++c) s(r, c) = j.cov(idx[r], idx[c]);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  const Eigen::VectorXd e = v - mu;
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * (nb * std::log(2.0 * std::numbers::pi) + logdet + e.dot(ldlt.solve(e)));
}

// Random SPD matrix with eigenvalues in [lo, hi].
template <class Rng>
Eigen::MatrixXd random_spd(Eigen::Index n, double lo, double hi, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (Eigen::Index k = 0; k < n; ++k) ev(k) = lo + (hi - lo) * rng.uniform();
  Eigen::MatrixXd s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

// Random stable model with state dimension n and observation dimension p.
template <class Rng>
ivol::StateSpaceModel random_model(Eigen::Index n, Eigen::Index p, Rng& rng) {
  ivol::StateSpaceModel m;
  m.B = Eigen::MatrixXd(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m.B(r, c) = rng.normal();
  const double radius = Eigen::EigenSolver<Eigen::MatrixXd>(m.B).eigenvalues().cwiseAbs().maxCoeff();
  m.B *= (0.3 + 0.6 * rng.uniform()) / std::max(radius, 1e-12);
  m.D = Eigen::MatrixXd(p, n);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m.D(r, c) = rng.normal();
  m.Gamma = random_spd(n, 0.1, 1.0, rng);
  m.Psi = random_spd(p, 0.1, 1.0, rng);
  m.pi1 = Eigen::VectorXd(n);
  for (Eigen::Index k = 0; k < n; ++k) m.pi1(k) = rng.normal();
  m.Sigma1 = random_spd(n, 0.2, 2.0, rng);
  return m;
}

// Draws T observation rows from the model.
template <class Rng>
Eigen::MatrixXd simulate(const ivol::StateSpaceModel& m, Eigen::Index T, Rng& rng) {
  const Eigen::MatrixXd lg = Eigen::LLT<Eigen::MatrixXd>(m.Gamma).matrixL();
  const Eigen::MatrixXd lp = Eigen::LLT<Eigen::MatrixXd>(m.Psi).matrixL();
  const Eigen::MatrixXd ls = Eigen::LLT<Eigen::MatrixXd>(m.Sigma1).matrixL();
  Eigen::MatrixXd y(T, m.obs_dim());
  Eigen::VectorXd x = m.pi1 + ls * rng.normal_vector(m.state_dim());
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) x = m.B * x + lg * rng.normal_vector(m.state_dim());
    y.row(t) = (m.D * x + lp * rng.normal_vector(m.obs_dim())).transpose();
  }
  return y;
}

}  // namespace oracle
