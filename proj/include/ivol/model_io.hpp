#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ivol/baselines.hpp"
#include "ivol/dof_select.hpp"
#include "ivol/kalman.hpp"

namespace ivol {

inline constexpr int kModelFormatVersion = 1;

/// Trained v-state model of one instrument with its provenance.
struct ModelDocument {
  std::string symbol;
  int selected_dof = 0;
  std::string train_start;  // ISO date
  std::string train_end;
  Eigen::Index train_days = 0;
  StateSpaceModel model;
  EmTrace trace;
};

struct DofDocument {
  std::string symbol;
  DofSelectConfig config;
  DofSelection selection;
};

/// Ground truth of a simulated instrument.
struct TruthDocument {
  std::string symbol;
  int true_dof = 0;
  StateSpaceModel model;
  Eigen::VectorXd log_profile;
};

/// JSON with shortest round-trip doubles; reading back is bit-exact.
/// Readers throw ParseError on malformed input or an unknown format version.
void write_model(std::ostream& out, const ModelDocument& doc);
ModelDocument read_model(std::istream& in);

void write_dof(std::ostream& out, const DofDocument& doc);
DofDocument read_dof(std::istream& in);

void write_truth(std::ostream& out, const TruthDocument& doc);
TruthDocument read_truth(std::istream& in);

/// Writes via a temporary file in the same directory and renames it into place.
void write_atomic_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace ivol
