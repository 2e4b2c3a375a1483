// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "ivol/config.hpp"
#include "ivol/dof_select.hpp"
#include "ivol/errors.hpp"
#include "ivol/eval.hpp"
#include "ivol/ingest.hpp"
#include "ivol/kalman.hpp"
#include "ivol/pipeline.hpp"
#include "ivol/random.hpp"
#include "ivol/spline.hpp"
#include "ivol/synth.hpp"
#include "../unit/oracles.hpp"

using namespace ivol;
namespace fs = std::filesystem;

namespace {

// Normalization audit shared by every criterion.
struct RowAudit {
  std::size_t rows = 0;
  double worst = 0.0;
  bool negative = false;

  void add(const Eigen::MatrixXd& m) {
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      worst = std::max(worst, std::abs(m.row(t).sum() - 100.0));
      negative = negative || m.row(t).minCoeff() < 0.0;
      ++rows;
    }
  }
};
RowAudit g_audit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int g_failures = 0;

void criterion(const char* id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = seconds_since(t0);
  const bool in_time = budget_s <= 0.0 || secs < budget_s;
  const bool pass = o.pass && in_time;
  g_failures += pass ? 0 : 1;
  std::printf("%s %s  %s  [%s; %.1fs%s]\n", id, pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs,
              budget_s > 0.0 ? (in_time ? " within budget" : " OVER BUDGET") : "");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Outcome ac1() {
  Rng rng(20240101);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index T = 1 + static_cast<Eigen::Index>(rng.below(5));
    const auto m = oracle::random_model(n, p, rng);
    const Eigen::MatrixXd y = oracle::simulate(m, T, rng);
    const auto f = kf_filter(m, y);
    const auto s = kf_smooth(m, f);
    const auto j = oracle::joint(m, T);
    const auto [all, vall] = oracle::observed(j, y, T - 1);
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto [obs, v] = oracle::observed(j, y, t);
      const auto fc = oracle::condition(j, oracle::range(j.x(t), n), obs, v);
      const auto sc = oracle::condition(j, oracle::range(j.x(t), n), all, vall);
      worst = std::max({worst, max_abs(fc.mean - f.filtered_mean[t]), max_abs(fc.cov - f.filtered_cov[t]),
                        max_abs(sc.mean - s.smoothed_mean[t]), max_abs(sc.cov - s.smoothed_cov[t])});
    }
  }
  return {worst < 1e-8, fmt("100 instances, max |dev| = %.2e (tol 1e-8)", worst)};
}

Outcome ac2() {
  double worst = 0.0;
  int iters = 0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng(derive_seed(77, {static_cast<std::uint64_t>(rep)}));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index p = n + static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(9 - n)));
    const auto truth = oracle::random_model(n, p, rng);
    const Eigen::MatrixXd y = oracle::simulate(truth, 200, rng);
    EmOptions opt;
    opt.max_iter = 200;
    const auto fit = em_fit(initial_model(truth.D, y.row(0).transpose()), y, opt);
    worst = std::max(worst, fit.trace.max_decrease());
    iters = std::max(iters, fit.trace.iterations);
  }
  return {worst <= 1e-8 && iters <= 200,
          fmt("50 instances, largest log-likelihood drop %.2e (tol 1e-8), max iterations %.0f (cap 200)", worst, iters)};
}

Outcome ac3() {
  double dof_dev = 0.0;
  for (double target : {2.5, 3.0, 5.0, 8.0, 12.0, 20.0, 30.0, 50.0, 77.0}) {
    dof_dev = std::max(dof_dev, std::abs(spline::effective_dof(spline::lambda_for_dof(target, 78), 78) - target));
  }
  const bool identity = spline::smoother_matrix(0.0, 78) == Eigen::MatrixXd::Identity(78, 78);
  Rng rng(3);
  const Eigen::VectorXd y = rng.normal_vector(78);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(78, 1.0, 78.0);
  Eigen::MatrixXd a(78, 2);
  a << Eigen::VectorXd::Ones(78), x;
  const double line_dev = max_abs(spline::smooth(y, 1e12) - a * a.colPivHouseholderQr().solve(y));
  double repro = 0.0;
  for (double lambda : {1e-4, 1.0, 1e4}) {
    repro = std::max({repro, max_abs(spline::smooth(Eigen::VectorXd::Ones(78), lambda).array() - 1.0),
                      max_abs(spline::smooth(x, lambda) - x)});
  }
  double dense = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double lambda = std::pow(10.0, -3.0 + 7.0 * rng.uniform());
    const Eigen::VectorXd v = 5.0 * rng.normal_vector(78);
    dense = std::max(dense, max_abs(spline::smooth(v, lambda) - oracle::spline_smoother(lambda, 78) * v));
  }
  const bool pass = dof_dev < 1e-6 && identity && line_dev < 1e-6 && repro < 1e-8 && dense < 1e-8;
  std::ostringstream d;
  d.precision(2);
  d << std::scientific << "trace dev " << dof_dev << " (1e-6), S_0=I " << (identity ? "yes" : "no")
    << ", LS-line dev " << line_dev << " (1e-6), const/linear dev " << repro << " (1e-8), dense-solve dev "
    << dense << " (1e-8)";
  return {pass, d.str()};
}

Outcome ac4() {
  SynthConfig cfg;
  cfg.n_stocks = 20;
  cfg.days = 2000;
  cfg.true_dof = {3, 4, 5, 6, 7, 8};
  cfg.state_noise = 0.02;
  cfg.obs_noise = 0.02;
  cfg.seed = 4;
  int hits = 0;
  std::string picks;
  for (int k = 0; k < cfg.n_stocks; ++k) {
    const SynthStock s = generate_stock(cfg, k);
    g_audit.add(s.panel.values);
    DofSelectConfig dc;
    dc.seed = 4;
    const int got = select_dof(s.panel, dc).best_dof;
    hits += std::abs(got - s.true_dof) <= 1 ? 1 : 0;
    picks += std::to_string(s.true_dof) + "->" + std::to_string(got) + " ";
  }
  Eigen::MatrixXd line(50, 78);
  for (int t = 0; t < 50; ++t)
    for (int i = 0; i < 78; ++i) line(t, i) = 0.4 + 0.0185 * i;
  line *= 100.0 / line.row(0).sum();
  const int linear = select_dof(line, DofSelectConfig{}).best_dof;
  const bool pass = hits >= 16 && linear == 2;
  return {pass, std::to_string(hits) + "/20 within +-1 (need 16); linear profile -> " + std::to_string(linear) +
                    " (need 2); true->selected: " + picks};
}

RunConfig experiment_config(const fs::path& out, int stocks, int days, int workers) {
  RunConfig c;
  c.out = out;
  c.seed = 2017;
  c.workers = workers;
  c.synth.n_stocks = stocks;
  c.synth.days = days;
  c.t_train = 125;
  return c;
}

// Synth -> ingest of the emitted bar files -> all modelling stages.
void full_pipeline(const RunConfig& c) {
  RunConfig gen = c;
  gen.out = c.out / "generated";
  if (run_synth(gen).exit_code() != 0) throw Error("synth stage failed");
  RunConfig in = c;
  in.input = gen.out / layout::kRaw;
  for (auto stage : {run_ingest, run_select_dof, run_train, run_predict, run_evaluate, run_report}) {
    const StageResult r = stage(in);
    if (r.exit_code() != 0) throw Error(r.stage + " failed: " + r.failures.front());
  }
}

void audit_outputs(const fs::path& out) {
  for (const auto& e : fs::directory_iterator(out / layout::kPanels)) {
    std::ifstream in(e.path());
    g_audit.add(read_panel(in).values);
  }
  for (const auto& e : fs::directory_iterator(out / layout::kPredictions)) {
    std::ifstream in(e.path());
    std::map<std::pair<std::string, Eigen::Index>, std::vector<double>> rows;
    for (const auto& r : read_predictions(in)) rows[{r.model, r.day}].push_back(r.p_pred);
    for (const auto& [k, v] : rows) g_audit.add(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
}

Outcome ac5(const fs::path& root) {
  const RunConfig c = experiment_config(root / "ac5", 20, 250, 1);
  fs::remove_all(c.out);
  full_pipeline(c);
  audit_outputs(c.out);
  std::ifstream in(c.out / layout::kReport / "mape_summary.csv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::map<std::string, double>> m;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string sym, model, val;
    std::getline(ls, sym, ',');
    std::getline(ls, model, ',');
    std::getline(ls, val, ',');
    m[sym][model] = std::stod(val);
  }
  int wins = 0;
  std::map<std::string, double> mean;
  for (const auto& [sym, row] : m) {
    wins += row.at("vstate") < row.at("rm") ? 1 : 0;
    for (const auto& [model, v] : row) mean[model] += v / static_cast<double>(m.size());
  }
  const bool pass = m.size() == 20 && wins >= 16 && mean["vstate"] < mean["rm"] && mean["vstate"] < mean["two_state"];
  return {pass, "v-state beats RM on " + std::to_string(wins) + "/20 (need 16); mean MAPE v-state " +
                    fmt("%.5f, RM %.5f, two-state %.5f", mean["vstate"], mean["rm"], mean["two_state"])};
}

Outcome ac6() {
  const Eigen::MatrixXd p = (Eigen::MatrixXd(2, 3) << 20, 30, 50, 1.0 / 3.0, 2.0 / 3.0, 99.0).finished();
  const std::vector<Date> dates{{2017, 1, 3}, {2017, 1, 4}};
  const double perfect = mape(make_records("S", "oracle", 0, dates, p, p));
  const bool pass = g_audit.rows > 0 && g_audit.worst <= 1e-9 && !g_audit.negative && perfect == 0.0;
  return {pass, std::to_string(g_audit.rows) + fmt(" rows audited, max |sum-100| = %.2e (tol 1e-9); perfect-predictor MAPE = %g",
                                                   g_audit.worst, perfect)};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = os.str();
  }
  return out;
}

Outcome ac7(const fs::path& root) {
  RunConfig a = experiment_config(root / "ac7_a", 6, 160, 1);
  RunConfig b = experiment_config(root / "ac7_b", 6, 160, 4);
  a.t_train = b.t_train = 100;
  fs::remove_all(a.out);
  fs::remove_all(b.out);
  full_pipeline(a);
  full_pipeline(b);
  write_manifest(a, "acceptance");
  write_manifest(b, "acceptance");
  audit_outputs(a.out);
  const auto sa = snapshot(a.out), sb = snapshot(b.out);
  int differing = 0;
  for (const auto& [name, body] : sa) {
    auto it = sb.find(name);
    differing += (it == sb.end() || it->second != body) ? 1 : 0;
  }
  const bool pass = !sa.empty() && sa.size() == sb.size() && differing == 0;
  return {pass, std::to_string(sa.size()) + " files compared (workers 1 vs 4), " + std::to_string(differing) + " differ"};
}

// Two full sessions holding the sample rows at their clock positions; other bins are filler.
std::string table_file(bool truncate) {
  std::ostringstream s;
  s << "Time,LAST,FIRST,HIGH,LOW,VOLUME,VWAP,time bin\n";
  const std::map<std::string, std::string> sample = {
      {"1/3/2017 14:30", "106.24,105.9,106.42,105.59,1139228,106.11"},
      {"1/3/2017 14:35", "105.28,106.24,106.34,105.19,1245847,105.77"},
      {"1/3/2017 14:40", "105.51,105.29,105.53,104.85,1289865,105.23"},
      {"1/3/2017 20:55", "106.23,106.04,106.23,106,1675070,106.09"},
      {"5/29/2020 13:30", "318.25,319.25,320,318.22,747433,319.21"},
      {"5/29/2020 19:55", "317.92,319.29,319.62,317.46,1969841,318.92"}};
  const std::pair<const char*, int> days[] = {{"1/3/2017", 14 * 60 + 30}, {"5/29/2020", 13 * 60 + 30}};
  for (const auto& [date, open] : days) {
    for (int i = 0; i < 78; ++i) {
      if (truncate && i == 40 && std::string(date) == "5/29/2020") continue;
      char tb[8];
      std::snprintf(tb, sizeof tb, "%02d:%02d", (open + 5 * i) / 60, (open + 5 * i) % 60);
      const auto it = sample.find(std::string(date) + " " + tb);
      s << date << ',' << (it != sample.end() ? it->second : "100,100,100,100,500000,100") << ',' << tb << '\n';
    }
  }
  return s.str();
}

Outcome ac8() {
  std::istringstream full(table_file(false));
  const BarSeries s = parse_bars(full, SchemaConfig{}, "AAPL");
  const Bar& first = s.days.at(0).bars.at(0);
  const double dv = dollar_volume(first);
  const double rel = std::abs(dv - 120883483.08) / 120883483.08;
  const Bar& last2020 = s.days.at(1).bars.at(77);
  bool rejected = false;
  std::string named;
  try {
    std::istringstream cut(table_file(true));
    parse_bars(cut, SchemaConfig{}, "AAPL");
  } catch (const IncompleteDayError& e) {
    rejected = true;
    named = e.date();
  }
  const bool pass = rel <= 1e-6 && first.volume == 1139228 && first.vwap == 106.11 && first.bin_index == 0 &&
                    last2020.volume == 1969841 && rejected && named == "2020-05-29";
  return {pass, fmt("first-row dollar volume %.2f (rel err %.1e, tol 1e-6); ", dv, rel) +
                    "77-bar day " + (rejected ? "rejected as incomplete (" + named + ")" : "NOT rejected")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "ivol_acceptance";
  fs::create_directories(root);
  criterion("AC1", "filter/smoother match dense Gaussian conditioning", 10.0, ac1);
  criterion("AC2", "EM log-likelihood ascent", 60.0, ac2);
  criterion("AC3", "smoothing-spline correctness", 10.0, ac3);
  criterion("AC4", "DOF-selection consistency", 300.0, ac4);
  criterion("AC5", "v-state beats baselines on synthetic panel", 600.0, [&] { return ac5(root); });
  criterion("AC7", "determinism across runs and worker counts", 0.0, [&] { return ac7(root); });
  criterion("AC8", "sample-table fidelity", 0.0, ac8);
  // Last, so that it audits every row produced above.
  criterion("AC6", "normalization invariants", 0.0, ac6);
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
