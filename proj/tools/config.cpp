#include "config.hpp"

#include <sstream>

#include "ggpfr/data.hpp"
#include "ggpfr/errors.hpp"

namespace ggpfr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) fail(ErrorClass::parse, where + ": expected key=value");
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) fail(ErrorClass::parse, where + ": empty key");
  return {key, trim(line.substr(eq + 1))};
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto [k, v] = split_assignment(line, "config line " + std::to_string(no));
    c.values_[k] = v;
  }
  return c;
}

Config Config::load(const std::string& path) { return parse(read_text_file(path)); }

void Config::apply_override(const std::string& assignment) {
  auto [k, v] = split_assignment(assignment, "override '" + assignment + "'");
  values_[k] = v;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::real(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_real(text(key));
  } catch (const Error&) {
    fail(ErrorClass::parse, "config key '" + key + "': not a number");
  }
}

long Config::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key);
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) fail(ErrorClass::parse, "config key '" + key + "': not an integer");
  return out;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorClass::parse, "config key '" + key + "': expected true or false");
}

std::vector<std::string> Config::words(const std::string& key) const {
  std::string v = text(key);
  for (char& ch : v)
    if (ch == ',') ch = ' ';
  std::istringstream in(v);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Vector Config::reals(const std::string& key) const {
  const auto w = words(key);
  Vector out(static_cast<Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    try {
      out(static_cast<Index>(i)) = parse_real(w[i]);
    } catch (const Error&) {
      fail(ErrorClass::parse, "config key '" + key + "': bad number '" + w[i] + "'");
    }
  }
  return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_)
    if (!allowed.count(k)) fail(ErrorClass::schema, "unknown config key '" + k + "'");
}

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys = {
      "family",        "family.trials",  "family.dispersion", "family.thresholds", "kernel.kind",
      "kernel.init",   "basis.D",        "basis.knots",       "basis.grid",        "objective",
      "optimizer.max_evals", "optimizer.tol", "optimizer.max_iterations", "restarts", "seed",
      "jitter",        "standardize",    "estimate_thresholds", "gamma"};
  return keys;
}

ObservationFamily family_from(const Config& config) {
  ObservationFamily f;
  f.kind = family_kind_from_string(config.text("family", "BERNOULLI_LOGIT"));
  f.trials = static_cast<int>(config.integer("family.trials", 1));
  f.dispersion = config.real("family.dispersion", 1.0);
  f.thresholds = config.reals("family.thresholds");
  if (!(f.is_ordinal() && f.thresholds.size() == 0)) f.check();
  return f;
}

ModelSpec model_spec_from(const Config& config, Index input_dim) {
  ModelSpec spec;
  spec.family = family_from(config);
  spec.kernel.kind = kernel_kind_from_string(config.text("kernel.kind", "SE_LINEAR"));
  spec.kernel.input_dim = input_dim;
  if (config.has("kernel.init")) {
    const Vector init = config.reals("kernel.init");
    if (init.size() != kernel_param_count(spec.kernel.kind, input_dim))
      fail(ErrorClass::invalid_argument, "kernel.init: expected " +
                                             std::to_string(kernel_param_count(spec.kernel.kind, input_dim)) +
                                             " values for " + to_string(spec.kernel.kind));
    if ((init.array() <= 0).any()) fail(ErrorClass::invalid_argument, "kernel.init values must be positive");
    spec.kernel.log_params = init.array().log().matrix();
  }
  const std::string d = config.text("basis.D", "auto");
  if (d != "auto") spec.basis.D = config.integer("basis.D", 0);
  spec.basis.knots = knot_method_from_string(config.text("basis.knots", to_string(KnotMethod::equal_spaced)));
  if (config.has("basis.grid")) {
    spec.basis.grid.clear();
    for (double g : config.reals("basis.grid")) spec.basis.grid.push_back(static_cast<Index>(g));
  }
  spec.objective = approximation_from_string(config.text("objective", "NESTED"));
  spec.optimizer.max_evals = static_cast<int>(config.integer("optimizer.max_evals", spec.optimizer.max_evals));
  spec.optimizer.tol = config.real("optimizer.tol", spec.optimizer.tol);
  spec.optimizer.max_iterations =
      static_cast<int>(config.integer("optimizer.max_iterations", spec.optimizer.max_iterations));
  spec.restarts = static_cast<int>(config.integer("restarts", spec.restarts));
  spec.seed = static_cast<std::uint64_t>(config.integer("seed", static_cast<long>(spec.seed)));
  spec.jitter = config.real("jitter", spec.jitter);
  spec.standardize = config.flag("standardize", spec.standardize);
  spec.estimate_thresholds = config.flag("estimate_thresholds", spec.estimate_thresholds);
  spec.check();
  return spec;
}

}  // namespace ggpfr::cli
