#include "ivol/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "ivol/errors.hpp"
#include "ivol/ingest.hpp"
#include "ivol/random.hpp"
#include "ivol/text.hpp"

namespace ivol {

using text::format_double;
using text::parse_double;
using text::parse_int;
using text::split;
using text::trim;

double abs_error(const PredictionRecord& r) { return std::abs(r.p_pred - r.p_true); }

double mape(std::span<const PredictionRecord> records) {
  if (records.empty()) throw EmptyInputError("mape: no prediction records");
  double sum = 0.0;
  for (const auto& r : records) sum += abs_error(r);
  return sum / static_cast<double>(records.size());
}

Census error_bound_census(std::span<const PredictionRecord> records) {
  if (records.empty()) throw EmptyInputError("census: no prediction records");
  std::size_t in = 0;
  for (const auto& r : records) in += abs_error(r) <= r.p_true ? 1 : 0;
  Census c;
  c.count = records.size();
  c.in_corner = static_cast<double>(in) / static_cast<double>(c.count);
  c.outside = 1.0 - c.in_corner;
  return c;
}

std::vector<ScatterPoint> reservoir_scatter(std::span<const PredictionRecord> records, std::size_t cap,
                                            std::uint64_t seed) {
  std::vector<ScatterPoint> out;
  if (cap == 0) return out;
  out.reserve(std::min(cap, records.size()));
  Rng rng(seed);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const ScatterPoint p{records[k].p_true, abs_error(records[k])};
    if (out.size() < cap) {
      out.push_back(p);
    } else {
      const std::size_t j = rng.below(k + 1);
      if (j < cap) out[j] = p;
    }
  }
  return out;
}

CorrelationMatrix state_correlation(const Eigen::MatrixXd& series) {
  const Eigen::Index n = series.cols();
  if (series.rows() < 2) throw InsufficientDataError("state_correlation needs at least two time points");
  const Eigen::MatrixXd centered = series.rowwise() - series.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  CorrelationMatrix out;
  out.values = Eigen::MatrixXd::Zero(n, n);
  out.defined.setConstant(n, n, false);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double va = cov(a, a), vb = cov(b, b);
      // Constant up to rounding relative to the column's magnitude.
      const double sa = series.col(a).squaredNorm(), sb = series.col(b).squaredNorm();
      if (!(va > 1e-24 * sa) || !(vb > 1e-24 * sb) || va == 0.0 || vb == 0.0) continue;
      out.defined(a, b) = true;
      out.values(a, b) = a == b ? 1.0 : std::clamp(cov(a, b) / std::sqrt(va * vb), -1.0, 1.0);
    }
  }
  return out;
}

Eigen::VectorXd gamma_eigenvalues(const Eigen::MatrixXd& gamma) {
  if (gamma.rows() != gamma.cols()) throw ShapeError("gamma_eigenvalues: matrix is not square");
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw DomainError("gamma_eigenvalues: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gamma + gamma.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

std::vector<PredictionRecord> make_records(const std::string& symbol, const std::string& model,
                                           Eigen::Index first_day, const std::vector<Date>& dates,
                                           const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) throw ShapeError("make_records: shape mismatch");
  if (first_day < 0 || first_day + pred.rows() > static_cast<Eigen::Index>(dates.size())) {
    throw BoundsError("make_records: rows run past the date list");
  }
  std::vector<PredictionRecord> out;
  out.reserve(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    const std::string date = dates[static_cast<std::size_t>(first_day + t)].iso();
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
      out.push_back({symbol, model, first_day + t, date, i, truth(t, i), pred(t, i)});
    }
  }
  return out;
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  out << "symbol,model,day,date,bin,p_true,p_pred\n";
  for (const auto& r : records) {
    out << r.symbol << ',' << r.model << ',' << r.day << ',' << r.date << ',' << r.bin << ','
        << format_double(r.p_true) << ',' << format_double(r.p_pred) << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "symbol,model,day,date,bin,p_true,p_pred") {
    throw ParseError(line_no, "unexpected prediction file header");
  }
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw ParseError(line_no, "expected 7 fields");
    const auto day = parse_int(f[2]);
    const auto bin = parse_int(f[4]);
    const auto pt = parse_double(f[5]);
    const auto pp = parse_double(f[6]);
    if (!day || !bin || !pt || !pp) throw ParseError(line_no, "malformed number");
    out.push_back({std::string(f[0]), std::string(f[1]), *day, std::string(f[3]), *bin, *pt, *pp});
  }
  return out;
}

void write_correlation(std::ostream& out, const CorrelationMatrix& corr) {
  const Eigen::Index n = corr.values.rows();
  out << "state";
  for (Eigen::Index b = 0; b < n; ++b) out << ",x" << b + 1;
  out << '\n';
  for (Eigen::Index a = 0; a < n; ++a) {
    out << 'x' << a + 1;
    for (Eigen::Index b = 0; b < n; ++b) {
      out << ',';
      if (corr.defined(a, b)) out << format_double(corr.values(a, b)); else out << "NA";
    }
    out << '\n';
  }
}

void write_scatter(std::ostream& out, std::span<const ScatterPoint> points) {
  out << "p_true,abs_error\n";
  for (const auto& p : points) out << format_double(p.p_true) << ',' << format_double(p.abs_error) << '\n';
}

}  // namespace ivol
