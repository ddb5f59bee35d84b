#pragma once
// Minimal CSV emitter. Floats are written with 17 significant digits so that
// values round-trip exactly.

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace adiv {

std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  // Provenance lines, written as "# key = value".
  void comment(std::string_view key, std::string_view value);
  void comment(std::string_view text);

  void header(std::initializer_list<std::string_view> names);
  void header(const std::vector<std::string>& names);

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(values), first = false), ...);
    os_ << '\n';
  }

  void row(const std::vector<std::string>& cells);

 private:
  template <class T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  std::ostream& os_;
};

}  // namespace adiv
