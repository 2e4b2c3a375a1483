#include "ivol/model_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "ivol/errors.hpp"

namespace ivol {
namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from(const json& j, const char* name) {
  if (!j.is_array()) throw ParseError(0, std::string(name) + " is not an array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(0, std::string(name) + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j, const char* name) {
  if (!j.is_array()) throw ParseError(0, std::string(name) + " is not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json ssm_json(const StateSpaceModel& m) {
  return {{"state_dim", m.state_dim()}, {"obs_dim", m.obs_dim()}, {"B", matrix_json(m.B)},
          {"D", matrix_json(m.D)},      {"Gamma", matrix_json(m.Gamma)}, {"Psi", matrix_json(m.Psi)},
          {"pi1", vector_json(m.pi1)},  {"Sigma1", matrix_json(m.Sigma1)}};
}

StateSpaceModel ssm_from(const json& j) {
  StateSpaceModel m;
  m.B = matrix_from(j.at("B"), "B");
  m.D = matrix_from(j.at("D"), "D");
  m.Gamma = matrix_from(j.at("Gamma"), "Gamma");
  m.Psi = matrix_from(j.at("Psi"), "Psi");
  m.pi1 = vector_from(j.at("pi1"), "pi1");
  m.Sigma1 = matrix_from(j.at("Sigma1"), "Sigma1");
  m.validate();
  return m;
}

json parse_document(std::istream& in, const char* format) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != format) {
    throw ParseError(0, std::string("not a ") + format + " document");
  }
  if (j.value("version", -1) != kModelFormatVersion) {
    throw ParseError(0, std::string("unsupported ") + format + " version");
  }
  return j;
}

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed document: ") + e.what());
  }
}

const char* scoring_name(ProfileFit f) { return f == ProfileFit::kSmoother ? "smoother" : "basis_projection"; }

}  // namespace

void write_model(std::ostream& out, const ModelDocument& doc) {
  const json j = {{"format", "ivol-vstate-model"},
                  {"version", kModelFormatVersion},
                  {"symbol", doc.symbol},
                  {"selected_dof", doc.selected_dof},
                  {"train", {{"start", doc.train_start}, {"end", doc.train_end}, {"days", doc.train_days}}},
                  {"model", ssm_json(doc.model)},
                  {"em",
                   {{"iterations", doc.trace.iterations},
                    {"converged", doc.trace.converged},
                    {"log_likelihood", doc.trace.log_likelihood}}}};
  out << j.dump(1) << '\n';
}

ModelDocument read_model(std::istream& in) {
  const json j = parse_document(in, "ivol-vstate-model");
  return guarded([&] {
    ModelDocument doc;
    doc.symbol = j.at("symbol").get<std::string>();
    doc.selected_dof = j.at("selected_dof").get<int>();
    doc.train_start = j.at("train").at("start").get<std::string>();
    doc.train_end = j.at("train").at("end").get<std::string>();
    doc.train_days = j.at("train").at("days").get<Eigen::Index>();
    doc.model = ssm_from(j.at("model"));
    doc.trace.iterations = j.at("em").at("iterations").get<int>();
    doc.trace.converged = j.at("em").at("converged").get<bool>();
    doc.trace.log_likelihood = j.at("em").at("log_likelihood").get<std::vector<double>>();
    if (doc.model.state_dim() != doc.selected_dof) throw ParseError(0, "state dimension differs from selected_dof");
    return doc;
  });
}

void write_dof(std::ostream& out, const DofDocument& doc) {
  json curve = json::array();
  const auto& c = doc.selection.curve;
  for (std::size_t k = 0; k < c.dofs.size(); ++k) {
    curve.push_back({{"dof", c.dofs[k]}, {"mean_mse", c.mean_mse[k]}, {"se_mse", c.se_mse[k]}});
  }
  const json j = {{"format", "ivol-dof-selection"},
                  {"version", kModelFormatVersion},
                  {"symbol", doc.symbol},
                  {"best_dof", doc.selection.best_dof},
                  {"n_shuffles", doc.config.n_shuffles},
                  {"n_folds", doc.config.n_folds},
                  {"split_frac", doc.config.split_frac},
                  {"seed", doc.config.seed},
                  {"scoring", scoring_name(doc.config.scoring)},
                  {"curve", curve}};
  out << j.dump(1) << '\n';
}

DofDocument read_dof(std::istream& in) {
  const json j = parse_document(in, "ivol-dof-selection");
  return guarded([&] {
    DofDocument doc;
    doc.symbol = j.at("symbol").get<std::string>();
    doc.selection.best_dof = j.at("best_dof").get<int>();
    doc.config.n_shuffles = j.at("n_shuffles").get<int>();
    doc.config.n_folds = j.at("n_folds").get<int>();
    doc.config.split_frac = j.at("split_frac").get<double>();
    doc.config.seed = j.at("seed").get<std::uint64_t>();
    const auto scoring = j.at("scoring").get<std::string>();
    if (scoring == "smoother") doc.config.scoring = ProfileFit::kSmoother;
    else if (scoring == "basis_projection") doc.config.scoring = ProfileFit::kBasisProjection;
    else throw ParseError(0, "unknown scoring " + scoring);
    auto& c = doc.selection.curve;
    doc.config.candidates.clear();
    for (const auto& p : j.at("curve")) {
      c.dofs.push_back(p.at("dof").get<int>());
      c.mean_mse.push_back(p.at("mean_mse").get<double>());
      c.se_mse.push_back(p.at("se_mse").get<double>());
      doc.config.candidates.push_back(c.dofs.back());
    }
    c.folds = doc.config.n_folds;
    c.shuffles = doc.config.n_shuffles;
    c.seed = doc.config.seed;
    return doc;
  });
}

void write_truth(std::ostream& out, const TruthDocument& doc) {
  const json j = {{"format", "ivol-synthetic-truth"},
                  {"version", kModelFormatVersion},
                  {"symbol", doc.symbol},
                  {"true_dof", doc.true_dof},
                  {"log_profile", vector_json(doc.log_profile)},
                  {"model", ssm_json(doc.model)}};
  out << j.dump(1) << '\n';
}

TruthDocument read_truth(std::istream& in) {
  const json j = parse_document(in, "ivol-synthetic-truth");
  return guarded([&] {
    TruthDocument doc;
    doc.symbol = j.at("symbol").get<std::string>();
    doc.true_dof = j.at("true_dof").get<int>();
    doc.log_profile = vector_from(j.at("log_profile"), "log_profile");
    doc.model = ssm_from(j.at("model"));
    return doc;
  });
}

void write_atomic_text(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace ivol
