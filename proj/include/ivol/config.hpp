#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ivol/baselines.hpp"
#include "ivol/dof_select.hpp"
#include "ivol/ingest.hpp"
#include "ivol/kalman.hpp"
#include "ivol/synth.hpp"

namespace ivol {

inline const std::vector<std::string> kModelNames = {"vstate", "rm", "two_state"};

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out = "ivol_out";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> models = kModelNames;
  int t_train = 125;
  int bins = kDefaultBinsPerDay;
  int rm_window = 20;
  int dof_min = 2;
  int dof_max = 30;
  int n_shuffles = 5;
  int n_folds = 5;
  double split_frac = 0.8;
  std::string scoring = "basis_projection";
  int em_max_iter = 200;
  double em_rel_tol = 1e-6;
  std::size_t scatter_cap = 200000;
  bool force = false;
  SchemaConfig schema;
  SynthConfig synth;

  DofSelectConfig dof_config() const;
  EmOptions em_options() const;
  RmConfig rm_config() const { return {rm_window}; }

  /// Throws ConfigError on out-of-range or inconsistent values.
  void validate() const;
};

/// Applies one `key=value` setting; '-' and '_' are interchangeable in keys.
/// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// `key = value` per line; blank lines and lines starting with '#' are ignored.
std::map<std::string, std::string> read_settings(const std::filesystem::path& path);

}  // namespace ivol
