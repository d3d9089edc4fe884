#pragma once

// Key/value configuration layered as defaults < config file < flags.
//
// File syntax (a TOML subset):
//   # comment
//   [segsalsa]
//   lambda_tv = 1.5
//   mlr.feature = "linear"     # fully qualified keys work anywhere
// Unknown keys and malformed values raise ConfigError.

#include "hsrc/error.hpp"
#include "hsrc/io.hpp"
#include "hsrc/mlr.hpp"
#include "hsrc/segsalsa.hpp"
#include "hsrc/synth.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsrc {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class Config {
 public:
  Config();

  void load_file(const std::filesystem::path& path);
  void load(std::istream& in, const std::string& origin = "config");
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;  // set to a non-empty value
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Typed views; each validates and throws ConfigError on bad values.
SynthSpec synth_spec_from(const Config& config);
SplitSpec split_spec_from(const Config& config);
MlrParams mlr_params_from(const Config& config);
VtvParams vtv_params_from(const Config& config);
// data.exclude_bands: comma-separated indices and inclusive ranges "a-b", sorted and unique.
std::vector<int> exclude_bands_from(const Config& config);

}  // namespace hsrc
