#include "adiv/csv.hpp"

#include <cmath>
#include <cstdio>

namespace adiv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::comment(std::string_view key, std::string_view value) {
  os_ << "# " << key << " = " << value << '\n';
}

void CsvWriter::comment(std::string_view text) { os_ << "# " << text << '\n'; }

void CsvWriter::header(std::initializer_list<std::string_view> names) {
  bool first = true;
  for (std::string_view n : names) {
    os_ << (first ? "" : ",") << n;
    first = false;
  }
  os_ << '\n';
}

void CsvWriter::header(const std::vector<std::string>& names) { row(names); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
  os_ << '\n';
}

}  // namespace adiv
