#include "ivol/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ivol/errors.hpp"
#include "ivol/eval.hpp"
#include "ivol/model_io.hpp"
#include "ivol/random.hpp"
#include "ivol/spline.hpp"
#include "ivol/text.hpp"

namespace ivol {
namespace fs = std::filesystem;
namespace {

fs::path sub(const RunConfig& c, const char* dir) { return c.out / dir; }
fs::path file_for(const RunConfig& c, const char* dir, const std::string& symbol, const char* ext) {
  return c.out / dir / (symbol + ext);
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

Panel load_panel(const RunConfig& c, const std::string& symbol) {
  auto in = open_in(file_for(c, layout::kPanels, symbol, ".csv"));
  Panel p = read_panel(in);
  if (p.bins() != c.bins) throw ShapeError("panel has " + std::to_string(p.bins()) + " bins, expected " + std::to_string(c.bins));
  if (p.days() <= c.t_train) throw InsufficientDataError("panel has no test days after t_train");
  return p;
}

template <class Reader>
bool readable(const fs::path& p, Reader&& read) {
  if (!fs::exists(p)) return false;
  try {
    std::ifstream in(p, std::ios::binary);
    read(in);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void record_errors(const RunConfig& c, const StageResult& r) {
  const fs::path p = sub(c, layout::kErrors) / (r.stage + ".txt");
  if (r.failures.empty()) {
    std::error_code ec;
    fs::remove(p, ec);
    return;
  }
  std::string body;
  for (const auto& f : r.failures) body += r.stage + ": " + f + "\n";
  write_atomic_text(p, body);
}

StageResult finish(const RunConfig& c, StageResult r) {
  record_errors(c, r);
  return r;
}

Eigen::MatrixXd log_rows(const Eigen::MatrixXd& dv) {
  if ((dv.array() <= 0.0).any()) throw DomainError("non-positive dollar volume; the two-state model needs logs");
  return dv.array().log().matrix();
}

}  // namespace

StageResult run_per_symbol(const std::string& stage, const std::vector<std::string>& symbols, int workers,
                           const std::function<bool(const std::string&)>& task) {
  StageResult r;
  r.stage = stage;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= symbols.size()) return;
      const std::string& s = symbols[k];
      try {
        const bool ran = task(s);
        std::lock_guard lock(mu);
        (ran ? r.done : r.skipped).push_back(s);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        r.failures.push_back(s + ": " + e.what());
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(symbols.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(r.done.begin(), r.done.end());
  std::sort(r.skipped.begin(), r.skipped.end());
  std::sort(r.failures.begin(), r.failures.end());
  return r;
}

std::vector<std::string> list_symbols(const RunConfig& c) {
  std::vector<std::string> out;
  const fs::path dir = sub(c, layout::kPanels);
  if (!fs::is_directory(dir)) throw EmptyInputError("no panels under " + dir.string() + "; run ingest or synth first");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw EmptyInputError("no panels under " + dir.string());
  return out;
}

StageResult run_ingest(const RunConfig& c) {
  if (c.input.empty()) throw ConfigError("ingest needs --input");
  std::vector<fs::path> files;
  if (fs::is_directory(c.input)) {
    for (const auto& e : fs::directory_iterator(c.input)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
  } else if (fs::is_regular_file(c.input)) {
    files.push_back(c.input);
  } else {
    throw ConfigError("input " + c.input.string() + " does not exist");
  }
  std::map<std::string, fs::path> by_symbol;
  for (const auto& f : files) by_symbol[f.stem().string()] = f;
  std::vector<std::string> symbols;
  for (const auto& [s, _] : by_symbol) symbols.push_back(s);
  return finish(c, run_per_symbol("ingest", symbols, c.workers, [&](const std::string& s) {
    auto in = open_in(by_symbol.at(s));
    const BarSeries bars = parse_bars(in, c.schema, s);
    const Panel panel = build_panel(bars);
    write_atomic_text(file_for(c, layout::kPanels, s, ".csv"), render([&](std::ostream& os) { write_panel(os, panel); }));
    return true;
  }));
}

StageResult run_synth(const RunConfig& c) {
  SynthConfig sc = c.synth;
  sc.bins = c.bins;
  sc.seed = c.seed;
  std::vector<std::string> symbols;
  std::map<std::string, int> index;
  for (int k = 0; k < sc.n_stocks; ++k) {
    symbols.push_back(synth_symbol(sc, k));
    index[symbols.back()] = k;
  }
  return finish(c, run_per_symbol("synth", symbols, c.workers, [&](const std::string& s) {
    const SynthStock st = generate_stock(sc, index.at(s));
    write_atomic_text(file_for(c, layout::kRaw, s, ".csv"),
                      render([&](std::ostream& os) { write_bars(os, st.bars, c.schema); }));
    write_atomic_text(file_for(c, layout::kPanels, s, ".csv"),
                      render([&](std::ostream& os) { write_panel(os, st.panel); }));
    const TruthDocument truth{s, st.true_dof, st.model, st.log_profile};
    write_atomic_text(file_for(c, layout::kTruth, s, ".json"),
                      render([&](std::ostream& os) { write_truth(os, truth); }));
    return true;
  }));
}

StageResult run_select_dof(const RunConfig& c) {
  c.validate();
  const DofSelectConfig dc = c.dof_config();
  return finish(c, run_per_symbol("select-dof", list_symbols(c), c.workers, [&](const std::string& s) {
    const fs::path target = file_for(c, layout::kDof, s, ".json");
    if (!c.force && readable(target, [](std::istream& in) { read_dof(in); })) return false;
    const Panel panel = load_panel(c, s);
    DofDocument doc{s, dc, select_dof(panel.slice(0, c.t_train), dc)};
    write_atomic_text(target, render([&](std::ostream& os) { write_dof(os, doc); }));
    return true;
  }));
}

StageResult run_train(const RunConfig& c) {
  c.validate();
  return finish(c, run_per_symbol("train", list_symbols(c), c.workers, [&](const std::string& s) {
    const fs::path target = file_for(c, layout::kModels, s, ".json");
    if (!c.force && readable(target, [](std::istream& in) { read_model(in); })) return false;
    auto din = open_in(file_for(c, layout::kDof, s, ".json"));
    const DofDocument dof = read_dof(din);
    const Panel panel = load_panel(c, s);
    const Panel train = panel.slice(0, c.t_train);
    const int d = dof.selection.best_dof;
    const Eigen::MatrixXd basis = spline::fit_spline(train.values.colwise().mean().transpose(), d).basis;
    const StateSpaceModel init = initial_model(basis, train.values.row(0).transpose());
    const EmResult fit = em_fit(init, train.values, c.em_options());
    ModelDocument doc{s, d, train.dates.front().iso(), train.dates.back().iso(), train.days(), fit.model, fit.trace};
    write_atomic_text(target, render([&](std::ostream& os) { write_model(os, doc); }));
    return true;
  }));
}

StageResult run_predict(const RunConfig& c) {
  c.validate();
  auto wants = [&](const char* m) { return std::find(c.models.begin(), c.models.end(), m) != c.models.end(); };
  return finish(c, run_per_symbol("predict", list_symbols(c), c.workers, [&](const std::string& s) {
    const Panel panel = load_panel(c, s);
    const Eigen::Index tt = c.t_train;
    const Eigen::Index n_test = panel.days() - tt;
    const Eigen::MatrixXd truth = panel.values.bottomRows(n_test);
    std::vector<PredictionRecord> records;
    auto add = [&](const char* name, const Eigen::MatrixXd& pred) {
      auto r = make_records(s, name, tt, panel.dates, truth, pred);
      records.insert(records.end(), r.begin(), r.end());
    };
    if (wants("vstate")) {
      auto in = open_in(file_for(c, layout::kModels, s, ".json"));
      const ModelDocument doc = read_model(in);
      if (doc.train_days != tt) throw ConfigError("model was trained on a different t_train");
      add("vstate", rollout_predict(doc.model, panel.values.topRows(tt), truth));
    }
    if (wants("rm")) add("rm", rm_rollout(panel.values, c.rm_config(), tt));
    if (wants("two_state")) {
      const Eigen::MatrixXd logs = log_rows(panel.dollar_volume);
      const TwoStateFit fit = two_state_fit(logs.topRows(tt), c.em_options());
      add("two_state", two_state_predict(fit.model, logs.topRows(tt), logs.bottomRows(n_test)));
    }
    write_atomic_text(file_for(c, layout::kPredictions, s, ".csv"),
                      render([&](std::ostream& os) { write_predictions(os, records); }));
    return true;
  }));
}

StageResult run_evaluate(const RunConfig& c) {
  c.validate();
  const std::vector<std::string> symbols = list_symbols(c);
  std::vector<std::vector<PredictionRecord>> per_symbol(symbols.size());
  std::map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < symbols.size(); ++k) slot[symbols[k]] = k;
  StageResult r = run_per_symbol("evaluate", symbols, c.workers, [&](const std::string& s) {
    auto in = open_in(file_for(c, layout::kPredictions, s, ".csv"));
    auto recs = read_predictions(in);
    std::erase_if(recs, [&](const PredictionRecord& p) {
      return std::find(c.models.begin(), c.models.end(), p.model) == c.models.end();
    });
    per_symbol[slot.at(s)] = std::move(recs);
    return true;
  });

  // (model -> records) over all symbols, in symbol order.
  std::map<std::string, std::vector<PredictionRecord>> by_model;
  std::ostringstream summary;
  summary << "symbol,model,mape,n_records\n";
  std::map<std::string, std::map<std::string, double>> mape_of;  // symbol -> model -> mape
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    std::map<std::string, std::vector<PredictionRecord>> mine;
    for (const auto& p : per_symbol[k]) mine[p.model].push_back(p);
    for (const auto& [model, recs] : mine) {
      const double e = mape(recs);
      mape_of[symbols[k]][model] = e;
      summary << symbols[k] << ',' << model << ',' << text::format_double(e) << ',' << recs.size() << '\n';
      auto& all = by_model[model];
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  const fs::path rep = sub(c, layout::kReport);
  write_atomic_text(rep / "mape_summary.csv", summary.str());

  std::ostringstream census;
  census << "model,in_corner,outside,n_records\n";
  std::ostringstream text_summary;
  text_summary << "MAPE (mean absolute difference of percentages), averaged over stocks\n";
  for (const auto& [model, recs] : by_model) {
    const Census cs = error_bound_census(recs);
    census << model << ',' << text::format_double(cs.in_corner) << ',' << text::format_double(cs.outside) << ','
           << cs.count << '\n';
    const auto pts = reservoir_scatter(recs, c.scatter_cap, derive_seed(c.seed, {0x5ca77e5ULL}));
    write_atomic_text(rep / ("scatter_" + model + ".csv"), render([&](std::ostream& os) { write_scatter(os, pts); }));
    double sum = 0.0;
    int n = 0;
    for (const auto& [sym, m] : mape_of) {
      if (auto it = m.find(model); it != m.end()) { sum += it->second; ++n; }
    }
    text_summary << "  " << model << ": " << text::format_double(sum / n) << " over " << n << " stocks\n";
  }
  for (const char* base : {"rm", "two_state"}) {
    int wins = 0, n = 0;
    for (const auto& [sym, m] : mape_of) {
      if (m.count("vstate") && m.count(base)) { ++n; wins += m.at("vstate") < m.at(base) ? 1 : 0; }
    }
    if (n > 0) text_summary << "  vstate beats " << base << " on " << wins << " of " << n << " stocks\n";
  }
  write_atomic_text(rep / "census.csv", census.str());
  write_atomic_text(rep / "summary.txt", text_summary.str());
  return finish(c, std::move(r));
}

StageResult run_report(const RunConfig& c) {
  c.validate();
  const fs::path rep = sub(c, layout::kReport);
  return finish(c, run_per_symbol("report", list_symbols(c), c.workers, [&](const std::string& s) {
    auto din = open_in(file_for(c, layout::kDof, s, ".json"));
    const DofDocument dof = read_dof(din);
    write_atomic_text(rep / "cv_curve" / (s + ".csv"),
                      render([&](std::ostream& os) { write_cv_curve(os, dof.selection.curve); }));
    auto min = open_in(file_for(c, layout::kModels, s, ".json"));
    const ModelDocument doc = read_model(min);
    const Panel panel = load_panel(c, s);
    const auto f = kf_filter(doc.model, panel.values.topRows(doc.train_days));
    const auto sm = kf_smooth(doc.model, f);
    Eigen::MatrixXd states(static_cast<Eigen::Index>(sm.smoothed_mean.size()), doc.model.state_dim());
    for (Eigen::Index t = 0; t < states.rows(); ++t) states.row(t) = sm.smoothed_mean[static_cast<std::size_t>(t)].transpose();
    const auto corr = state_correlation(states);
    write_atomic_text(rep / "correlation" / (s + ".csv"), render([&](std::ostream& os) { write_correlation(os, corr); }));
    const Eigen::VectorXd ev = gamma_eigenvalues(doc.model.Gamma);
    write_atomic_text(rep / "eigenvalues" / (s + ".csv"), render([&](std::ostream& os) {
      os << "rank,eigenvalue\n";
      for (Eigen::Index k = 0; k < ev.size(); ++k) os << k + 1 << ',' << text::format_double(ev(k)) << '\n';
    }));
    return true;
  }));
}

void write_manifest(const RunConfig& c, const std::string& command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const nlohmann::json j = {{"command", command},
                            {"timestamp", stamp},
                            {"seed", c.seed},
                            {"workers", c.workers},
                            {"models", c.models},
                            {"t_train", c.t_train},
                            {"bins", c.bins},
                            {"rm_window", c.rm_window},
                            {"dof_range", {c.dof_min, c.dof_max}},
                            {"n_shuffles", c.n_shuffles},
                            {"n_folds", c.n_folds},
                            {"split_frac", c.split_frac},
                            {"scoring", c.scoring},
                            {"em_max_iter", c.em_max_iter},
                            {"em_rel_tol", c.em_rel_tol}};
  write_atomic_text(c.out / "run_manifest.json", j.dump(1) + "\n");
}

}  // namespace ivol
