#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivol/ingest.hpp"
#include "ivol/kalman.hpp"

namespace ivol {

/// Simulated bar data whose log-volume deviations from a smooth intraday
/// profile follow a d-state linear-Gaussian model with spline-basis loadings.
struct SynthConfig {
  int n_stocks = 20;
  int days = 250;
  int bins = kDefaultBinsPerDay;
  /// True state dimension per stock, cycled over stocks.
  std::vector<int> true_dof = {3, 4, 5, 6, 7, 8};
  /// Stationary standard deviation of each state coordinate (log scale).
  double state_noise = 0.1;
  /// Diagonal state transition coefficients are drawn uniformly from this range.
  double persistence_min = 0.9;
  double persistence_max = 0.99;
  /// Per-bin log-volume noise.
  double obs_noise = 0.1;
  /// Stationary standard deviation of the daily log level.
  double level_noise = 0.1;
  /// Intraday price jitter; the daily price walk uses ten times this.
  double price_noise = 0.001;
  /// Relative size of each higher-order shape component of the profile.
  double shape_amplitude = 0.1;
  std::uint64_t seed = 0;
  std::string symbol_prefix = "SYN";
};

struct SynthStock {
  BarSeries bars;
  Panel panel;
  int true_dof = 0;
  /// Generating model of the log-volume deviations (Psi = obs_noise^2 I).
  StateSpaceModel model;
  /// Log of the relative mean profile.
  Eigen::VectorXd log_profile;
  /// Simulated states, one row per day.
  Eigen::MatrixXd states;
};

std::string synth_symbol(const SynthConfig& config, int index);

/// Stock `index`; depends only on (config, symbol), not on the other stocks.
SynthStock generate_stock(const SynthConfig& config, int index);
std::vector<SynthStock> generate_panel(const SynthConfig& config);

/// Weekdays starting at `start`.
std::vector<Date> business_days(Date start, int count);

}  // namespace ivol
