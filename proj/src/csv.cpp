#include "hsrc/csv.hpp"

#include "hsrc/error.hpp"

#include <cmath>
#include <cstdlib>

namespace hsrc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      fields.emplace_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

double parse_double(std::string_view text) {
  text = trim(text);
  std::string owned(text);
  char* end = nullptr;
  const double v = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size()) {
    throw FormatError("not a number: '" + owned + "'");
  }
  return v;
}

long long parse_integer(std::string_view text) {
  text = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty()) return v;
  // Accept integral values written as reals, e.g. "3.0".
  const double d = parse_double(text);
  if (std::floor(d) != d || !std::isfinite(d)) {
    throw FormatError("not an integer: '" + std::string(text) + "'");
  }
  return static_cast<long long>(d);
}

}  // namespace hsrc
