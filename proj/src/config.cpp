#include "ivol/config.hpp"

#include <algorithm>
#include <fstream>

#include "ivol/errors.hpp"
#include "ivol/text.hpp"

namespace ivol {
namespace {

std::string normalize(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

long long as_int(const std::string& key, const std::string& v) {
  const auto x = text::parse_int(text::trim(v));
  if (!x) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return *x;
}

double as_double(const std::string& key, const std::string& v) {
  const auto x = text::parse_double(text::trim(v));
  if (!x) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return *x;
}

bool as_bool(const std::string& key, const std::string& v) {
  const auto t = text::trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> as_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : text::split(v, ',')) {
    part = text::trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

}  // namespace

DofSelectConfig RunConfig::dof_config() const {
  DofSelectConfig c;
  c.candidates.clear();
  for (int d = dof_min; d <= dof_max; ++d) c.candidates.push_back(d);
  c.n_shuffles = n_shuffles;
  c.n_folds = n_folds;
  c.split_frac = split_frac;
  c.seed = seed;
  c.scoring = scoring == "smoother" ? ProfileFit::kSmoother : ProfileFit::kBasisProjection;
  return c;
}

EmOptions RunConfig::em_options() const {
  EmOptions o;
  o.max_iter = em_max_iter;
  o.rel_tol = em_rel_tol;
  return o;
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (t_train < 10) throw ConfigError("t_train must be >= 10");
  if (bins < 4) throw ConfigError("bins must be >= 4");
  if (rm_window < 1) throw ConfigError("rm_window must be >= 1");
  if (dof_min < 2 || dof_max < dof_min || dof_max > bins) throw ConfigError("need 2 <= dof_min <= dof_max <= bins");
  if (n_shuffles < 1 || n_folds < 1) throw ConfigError("n_shuffles and n_folds must be >= 1");
  if (!(split_frac > 0.0 && split_frac < 1.0)) throw ConfigError("split_frac must lie in (0, 1)");
  if (scoring != "basis_projection" && scoring != "smoother") throw ConfigError("scoring must be basis_projection or smoother");
  if (em_max_iter < 0 || !(em_rel_tol >= 0.0)) throw ConfigError("invalid EM options");
  if (models.empty()) throw ConfigError("no models selected");
  for (const auto& m : models) {
    if (std::find(kModelNames.begin(), kModelNames.end(), m) == kModelNames.end()) {
      throw ConfigError("unknown model '" + m + "'");
    }
  }
  if (schema.bins_per_day != bins || synth.bins != bins) throw ConfigError("inconsistent bins settings");
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& v) {
  const std::string key = normalize(std::string(text::trim(raw_key)));
  const std::string val(text::trim(v));
  if (key == "input") c.input = val;
  else if (key == "out") c.out = val;
  else if (key == "seed") { c.seed = static_cast<std::uint64_t>(as_int(key, val)); c.synth.seed = c.seed; }
  else if (key == "workers") c.workers = static_cast<int>(as_int(key, val));
  else if (key == "models") c.models = as_list(val);
  else if (key == "t_train") c.t_train = static_cast<int>(as_int(key, val));
  else if (key == "bins") { c.bins = static_cast<int>(as_int(key, val)); c.schema.bins_per_day = c.bins; c.synth.bins = c.bins; }
  else if (key == "rm_window") c.rm_window = static_cast<int>(as_int(key, val));
  else if (key == "dof_min") c.dof_min = static_cast<int>(as_int(key, val));
  else if (key == "dof_max") c.dof_max = static_cast<int>(as_int(key, val));
  else if (key == "n_shuffles") c.n_shuffles = static_cast<int>(as_int(key, val));
  else if (key == "n_folds") c.n_folds = static_cast<int>(as_int(key, val));
  else if (key == "split_frac") c.split_frac = as_double(key, val);
  else if (key == "scoring") c.scoring = val;
  else if (key == "em_max_iter") c.em_max_iter = static_cast<int>(as_int(key, val));
  else if (key == "em_rel_tol") c.em_rel_tol = as_double(key, val);
  else if (key == "scatter_cap") c.scatter_cap = static_cast<std::size_t>(as_int(key, val));
  else if (key == "force") c.force = as_bool(key, val);
  else if (key == "delimiter") {
    if (val.size() != 1 && val != "tab") throw ConfigError("delimiter must be one character or 'tab'");
    c.schema.delimiter = val == "tab" ? '\t' : val[0];
  }
  else if (key == "date_format") c.schema.date_format = val;
  else if (key == "synth_stocks") c.synth.n_stocks = static_cast<int>(as_int(key, val));
  else if (key == "synth_days") c.synth.days = static_cast<int>(as_int(key, val));
  else if (key == "synth_true_dof") {
    c.synth.true_dof.clear();
    for (const auto& s : as_list(val)) c.synth.true_dof.push_back(static_cast<int>(as_int(key, s)));
  }
  else if (key == "synth_state_noise") c.synth.state_noise = as_double(key, val);
  else if (key == "synth_obs_noise") c.synth.obs_noise = as_double(key, val);
  else if (key == "synth_level_noise") c.synth.level_noise = as_double(key, val);
  else if (key == "synth_price_noise") c.synth.price_noise = as_double(key, val);
  else if (key == "synth_persistence_min") c.synth.persistence_min = as_double(key, val);
  else if (key == "synth_persistence_max") c.synth.persistence_max = as_double(key, val);
  else if (key == "synth_shape_amplitude") c.synth.shape_amplitude = as_double(key, val);
  else throw ConfigError("unknown setting '" + raw_key + "'");
}

std::map<std::string, std::string> read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key=value");
    out[normalize(std::string(text::trim(t.substr(0, eq))))] = std::string(text::trim(t.substr(eq + 1)));
  }
  return out;
}

}  // namespace ivol
