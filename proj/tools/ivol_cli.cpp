// Command-line driver: ingest/synth -> select-dof -> train -> predict -> evaluate -> report.
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ivol/config.hpp"
#include "ivol/errors.hpp"
#include "ivol/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;

int report(const ivol::StageResult& r) {
  std::cerr << r.stage << ": " << r.done.size() << " done, " << r.skipped.size() << " skipped, "
            << r.failures.size() << " failed\n";
  for (const auto& f : r.failures) std::cerr << "  [" << r.stage << "] " << f << '\n';
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intraday volume-percentage forecasting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
  app.add_option("--config", config_file, "key=value settings file");
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--input", "input"},     {"--out", "out"},         {"--seed", "seed"},
      {"--workers", "workers"}, {"--models", "models"},   {"--t-train", "t_train"},
      {"--bins", "bins"},       {"--rm-window", "rm_window"}};
  for (const auto& [flag, key] : flag_keys) app.add_option(flag, flags[key], key);
  app.add_option("--set", sets, "extra key=value setting (repeatable)");
  bool force = false;
  app.add_flag("--force", force, "recompute outputs that already exist");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "parse raw bar files into percentage panels"},
      {"synth", "generate simulated bar files, panels and ground truth"},
      {"select-dof", "choose the state dimension per instrument by cross-validation"},
      {"train", "fit the v-state model per instrument"},
      {"predict", "day-ahead predictions for the test days"},
      {"evaluate", "MAPE summary, error census and scatter"},
      {"report", "CV curves, state correlations and noise eigenvalues"},
      {"run", "select-dof, train, predict, evaluate and report in sequence"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) subs.push_back(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ivol::RunConfig config;
  std::string command;
  for (auto* s : subs) {
    if (s->parsed()) command = s->get_name();
  }
  try {
    if (!config_file.empty()) {
      for (const auto& [k, v] : ivol::read_settings(config_file)) ivol::apply_setting(config, k, v);
    }
    for (const auto& [flag, key] : flag_keys) {
      if (app.count(flag) > 0) ivol::apply_setting(config, key, flags[key]);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ivol::ConfigError("--set expects key=value, got '" + s + "'");
      ivol::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    if (force) config.force = true;
    config.validate();
  } catch (const ivol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    ivol::write_manifest(config, command);
    if (command == "ingest") return report(ivol::run_ingest(config));
    if (command == "synth") return report(ivol::run_synth(config));
    if (command == "select-dof") return report(ivol::run_select_dof(config));
    if (command == "train") return report(ivol::run_train(config));
    if (command == "predict") return report(ivol::run_predict(config));
    if (command == "evaluate") return report(ivol::run_evaluate(config));
    if (command == "report") return report(ivol::run_report(config));
    int code = 0;
    for (auto stage : {ivol::run_select_dof, ivol::run_train, ivol::run_predict, ivol::run_evaluate, ivol::run_report}) {
      code = std::max(code, report(stage(config)));
    }
    return code;
  } catch (const ivol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return 1;
  }
}
