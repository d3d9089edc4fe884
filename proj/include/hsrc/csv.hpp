#pragma once

// Minimal CSV support: comma separated, no quoting, no header inference.
// Floating-point values are written in shortest round-trip form so output is
// byte-stable across runs.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace hsrc {

std::string format_number(double value);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    out_ << '\n';
  }

 private:
  template <typename T>
  void put(const T& field, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << format_number(static_cast<double>(field));
    } else {
      out_ << field;
    }
  }

  std::ostream& out_;
};

// Splits every nonempty line on commas; surrounding whitespace is trimmed.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

// Strict parses: the whole field must be consumed. Throw FormatError.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

}  // namespace hsrc
