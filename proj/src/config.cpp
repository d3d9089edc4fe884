#include "hsrc/config.hpp"

#include "hsrc/csv.hpp"
#include "hsrc/defaults.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hsrc {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Drops a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t j = 0; j < line.size(); ++j) {
    if (line[j] == '"') quoted = !quoted;
    if (line[j] == '#' && !quoted) return line.substr(0, j);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

template <typename Fn>
auto converting(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

Config::Config() {
  for (const DefaultEntry& e : kDefaults) values_[std::string(e.key)] = std::string(e.value);
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second = value;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  load(in, path.string());
}

void Config::load(std::istream& in, const std::string& origin) {
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    if (!values_.contains(key)) throw ConfigError(where + ": unknown configuration key '" + key + "'");
    values_[key] = value;
  }
}

bool Config::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_integer(v);
  } catch (const FormatError&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key);
}

SynthSpec synth_spec_from(const Config& c) {
  SynthSpec s;
  s.height = static_cast<int>(c.get_int("synth.height"));
  s.width = static_cast<int>(c.get_int("synth.width"));
  s.classes = static_cast<int>(c.get_int("synth.classes"));
  s.bands = static_cast<int>(c.get_int("synth.bands"));
  s.separation = c.get_double("synth.separation");
  s.region = converting("synth.region", [&] { return parse_region_kind(c.get_string("synth.region")); });
  s.block_min = static_cast<int>(c.get_int("synth.block_min"));
  s.block_max = static_cast<int>(c.get_int("synth.block_max"));
  s.split_probability = c.get_double("synth.split_probability");
  s.voronoi_sites = static_cast<int>(c.get_int("synth.voronoi_sites"));
  s.seed = static_cast<std::uint64_t>(c.get_int("run.seed"));
  if (c.has("synth.noise_sigma")) {
    s.noise_sigma = c.get_double("synth.noise_sigma");
  } else {
    s.noise_sigma = converting("synth.bayes_error", [&] {
      return sigma_for_bayes_error(s.classes, s.separation, c.get_double("synth.bayes_error"));
    });
  }
  converting("synth", [&] {
    s.validate();
    return 0;
  });
  return s;
}

SplitSpec split_spec_from(const Config& c) {
  SplitSpec s;
  const long long per_class = c.get_int("split.samples_per_class");
  const long long validation = c.get_int("split.validation_samples");
  if (per_class < 1) throw ConfigError("split.samples_per_class must be at least 1");
  if (validation < 0) throw ConfigError("split.validation_samples must be >= 0");
  s.samples_per_class = static_cast<int>(per_class);
  s.validation_samples = static_cast<int>(validation);
  s.per_class_validation = c.get_bool("split.per_class_validation");
  s.seed = static_cast<std::uint64_t>(c.get_int("run.seed"));
  return s;
}

MlrParams mlr_params_from(const Config& c) {
  MlrParams p;
  p.feature = converting("mlr.feature", [&] { return parse_feature_kind(c.get_string("mlr.feature")); });
  p.rbf_gamma = c.get_optional_double("mlr.rbf_gamma");
  p.lambda_w = c.get_double("mlr.lambda_w");
  p.max_iter = static_cast<int>(c.get_int("mlr.max_iter"));
  p.tol = c.get_double("mlr.tol");
  if (!(p.lambda_w >= 0.0)) throw ConfigError("mlr.lambda_w must be >= 0");
  if (p.max_iter < 0) throw ConfigError("mlr.max_iter must be >= 0");
  if (!(p.tol > 0.0)) throw ConfigError("mlr.tol must be positive");
  if (p.rbf_gamma && !(*p.rbf_gamma > 0.0)) throw ConfigError("mlr.rbf_gamma must be positive");
  return p;
}

VtvParams vtv_params_from(const Config& c) {
  VtvParams p;
  p.lambda_tv = c.get_double("segsalsa.lambda_tv");
  p.mu = c.get_double("segsalsa.mu");
  p.max_iter = static_cast<int>(c.get_int("segsalsa.max_iter"));
  p.tol_primal = c.get_double("segsalsa.tol_primal");
  p.threads = static_cast<int>(c.get_int("run.threads"));
  converting("segsalsa", [&] {
    validate(p);
    return 0;
  });
  return p;
}

std::vector<int> exclude_bands_from(const Config& c) {
  const std::string text = c.get_string("data.exclude_bands");
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      const auto dash = item.find('-', 1);
      const long long lo = parse_integer(trim(item.substr(0, dash)));
      const long long hi = dash == std::string::npos ? lo : parse_integer(trim(item.substr(dash + 1)));
      if (lo < 0 || hi < lo || hi > 1'000'000) throw FormatError("bad range");
      for (long long b = lo; b <= hi; ++b) out.push_back(static_cast<int>(b));
    } catch (const FormatError&) {
      throw ConfigError("data.exclude_bands: cannot parse '" + item + "'");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hsrc
