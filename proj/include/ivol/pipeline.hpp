#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ivol/config.hpp"

namespace ivol {

/// Outcome of one stage over all instruments.
struct StageResult {
  std::string stage;
  std::vector<std::string> done;
  std::vector<std::string> skipped;  // valid output already present
  std::vector<std::string> failures;  // "SYMBOL: message", sorted

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// Output layout under RunConfig::out.
namespace layout {
inline constexpr const char* kRaw = "raw";
inline constexpr const char* kPanels = "panels";
inline constexpr const char* kTruth = "truth";
inline constexpr const char* kDof = "dof";
inline constexpr const char* kModels = "models";
inline constexpr const char* kPredictions = "predictions";
inline constexpr const char* kReport = "report";
inline constexpr const char* kErrors = "errors";
}  // namespace layout

StageResult run_ingest(const RunConfig& config);
StageResult run_synth(const RunConfig& config);
StageResult run_select_dof(const RunConfig& config);
StageResult run_train(const RunConfig& config);
StageResult run_predict(const RunConfig& config);
StageResult run_evaluate(const RunConfig& config);
StageResult run_report(const RunConfig& config);

/// Runs `task` for every symbol on `workers` threads; results are sorted by symbol.
StageResult run_per_symbol(const std::string& stage, const std::vector<std::string>& symbols, int workers,
                           const std::function<bool(const std::string&)>& task);

/// Symbols with a panel file under `out`, sorted.
std::vector<std::string> list_symbols(const RunConfig& config);

/// Records the command and settings in run_manifest.json (the only file with timestamps).
void write_manifest(const RunConfig& config, const std::string& command);

}  // namespace ivol
