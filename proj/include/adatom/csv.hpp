#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "adatom/error.hpp"

namespace adatom::csv {

/// Locale-independent shortest form with 12 significant digits.
inline std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
  if (res.ec != std::errc{}) throw Error("csv: number formatting failed");
  return std::string(buf, res.ptr);
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
    out_ << '\n';
    return *this;
  }

  Writer& row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format(values[i]);
    out_ << '\n';
    return *this;
  }

 private:
  std::ostream& out_;
};

inline std::ofstream open(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  return f;
}

}  // namespace adatom::csv
