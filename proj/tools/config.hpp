#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ggpfr/fit.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr::cli {

// Flat key=value settings. '#' starts a comment; later entries win.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // "key=value" as given on the command line.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string text(const std::string& key, const std::string& fallback = "") const;
  double real(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  Vector reals(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  void require_known(const std::set<std::string>& allowed) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

const std::set<std::string>& model_keys();

// family.* keys, checked; ordinal thresholds may be left empty for fitting.
ObservationFamily family_from(const Config& config);
ModelSpec model_spec_from(const Config& config, Index input_dim = 1);

}  // namespace ggpfr::cli
