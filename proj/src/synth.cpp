#include "ivol/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "ivol/errors.hpp"
#include "ivol/random.hpp"
#include "ivol/spline.hpp"

namespace ivol {
namespace {

double cents(double x) { return std::round(x * 100.0) / 100.0; }

std::string clock_label(int minutes) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", (minutes / 60) % 24, minutes % 60);
  return buf;
}

void check(const SynthConfig& c) {
  if (c.n_stocks < 1 || c.days < 2) throw DomainError("synth: need at least one stock and two days");
  if (c.bins < 4 || c.bins > 288) throw DomainError("synth: bins must be in [4, 288]");
  if (c.true_dof.empty()) throw DomainError("synth: true_dof is empty");
  for (int d : c.true_dof) {
    if (d < 2 || d > c.bins) throw DomainError("synth: true dof outside [2, bins]");
  }
  if (!(c.persistence_min >= 0.0 && c.persistence_min <= c.persistence_max && c.persistence_max < 1.0)) {
    throw DomainError("synth: need 0 <= persistence_min <= persistence_max < 1");
  }
  for (double s : {c.state_noise, c.obs_noise, c.level_noise, c.price_noise, c.shape_amplitude}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("synth: noise scales must be finite and non-negative");
  }
}

}  // namespace

std::vector<Date> business_days(Date start, int count) {
  using namespace std::chrono;
  sys_days d = year_month_day{year{start.year}, month{static_cast<unsigned>(start.month)},
                              day{static_cast<unsigned>(start.day)}};
  std::vector<Date> out;
  while (static_cast<int>(out.size()) < count) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{d};
      out.push_back({static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                     static_cast<int>(static_cast<unsigned>(ymd.day()))});
    }
    d += days{1};
  }
  return out;
}

std::string synth_symbol(const SynthConfig& config, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return config.symbol_prefix + buf;
}

SynthStock generate_stock(const SynthConfig& c, int index) {
  check(c);
  const int bins = c.bins;
  const int d = c.true_dof[static_cast<std::size_t>(index) % c.true_dof.size()];
  SynthStock out;
  out.true_dof = d;
  out.bars.symbol = synth_symbol(c, index);
  out.bars.bins_per_day = bins;
  Rng rng(symbol_seed(c.seed, out.bars.symbol));

  // Smooth relative profile inside the span of the first d spline directions.
  const Eigen::MatrixXd u = spline::fit_spline(Eigen::VectorXd::Zero(bins), d).directions;
  Eigen::VectorXd shape = Eigen::VectorXd::Zero(bins);
  for (int k = 1; k < d; ++k) {
    Eigen::VectorXd uk = u.col(k) / u.col(k).cwiseAbs().maxCoeff();
    if (k == 2) {
      if (uk(0) < 0.0) uk = -uk;  // ends high: U shape
      shape += 0.5 * uk;
    } else {
      shape += (rng.uniform() < 0.5 ? -1.0 : 1.0) * c.shape_amplitude * uk;
    }
  }
  if (shape.minCoeff() < -0.8) shape *= 0.8 / -shape.minCoeff();
  const Eigen::VectorXd profile = Eigen::VectorXd::Ones(bins) + shape;
  out.log_profile = profile.array().log().matrix();

  // State dynamics; D spreads each unit of state over the day with mean square one.
  auto& m = out.model;
  m.D = u * std::sqrt(static_cast<double>(bins) / d);
  m.B = Eigen::MatrixXd::Zero(d, d);
  m.Gamma = Eigen::MatrixXd::Zero(d, d);
  m.Sigma1 = Eigen::MatrixXd::Zero(d, d);
  const double sv = c.state_noise * c.state_noise;
  for (int k = 0; k < d; ++k) {
    const double rho = c.persistence_min + (c.persistence_max - c.persistence_min) * rng.uniform();
    m.B(k, k) = rho;
    m.Gamma(k, k) = sv * (1.0 - rho * rho);
    m.Sigma1(k, k) = sv;
  }
  m.Psi = c.obs_noise * c.obs_noise * Eigen::MatrixXd::Identity(bins, bins);
  m.pi1 = Eigen::VectorXd::Zero(d);

  const std::vector<Date> dates = business_days({2017, 1, 3}, c.days);
  out.states.resize(c.days, d);
  Eigen::VectorXd z(d);
  for (int k = 0; k < d; ++k) z(k) = c.state_noise * rng.normal();
  double level = c.level_noise * rng.normal();
  const double level_rho = 0.8;
  double price = 100.0;
  const double base = std::log(5e5);
  for (int t = 0; t < c.days; ++t) {
    if (t > 0) {
      for (int k = 0; k < d; ++k) z(k) = m.B(k, k) * z(k) + std::sqrt(m.Gamma(k, k)) * rng.normal();
      level = level_rho * level + c.level_noise * std::sqrt(1.0 - level_rho * level_rho) * rng.normal();
      price *= std::exp(10.0 * c.price_noise * rng.normal());
    }
    out.states.row(t) = z.transpose();
    const Eigen::VectorXd dev = m.D * z;
    TradingDay day;
    day.date = dates[static_cast<std::size_t>(t)];
    for (int i = 0; i < bins; ++i) {
      Bar b;
      b.date = day.date;
      b.bin_index = i;
      b.time_bin = clock_label(14 * 60 + 30 + 5 * i);
      const double lv = base + level + out.log_profile(i) + dev(i) + c.obs_noise * rng.normal();
      b.volume = std::max<std::int64_t>(1, std::llround(std::exp(lv)));
      b.vwap = std::max(0.01, cents(price * std::exp(c.price_noise * rng.normal())));
      b.first = std::max(0.01, cents(b.vwap * std::exp(c.price_noise * rng.normal())));
      b.last = std::max(0.01, cents(b.vwap * std::exp(c.price_noise * rng.normal())));
      const double spread = cents(std::abs(c.price_noise * rng.normal()) * b.vwap);
      b.high = std::max({b.first, b.last, b.vwap}) + spread;
      b.low = std::max(0.01, std::min({b.first, b.last, b.vwap}) - spread);
      day.bars.push_back(std::move(b));
    }
    out.bars.days.push_back(std::move(day));
  }
  out.panel = build_panel(out.bars);
  return out;
}

std::vector<SynthStock> generate_panel(const SynthConfig& config) {
  check(config);
  std::vector<SynthStock> out;
  out.reserve(static_cast<std::size_t>(config.n_stocks));
  for (int k = 0; k < config.n_stocks; ++k) out.push_back(generate_stock(config, k));
  return out;
}

}  // namespace ivol
