#include "adiv/capacity.hpp"

#include <cmath>
#include <stdexcept>

namespace adiv {

CapacityFunction::CapacityFunction(Kind kind, double c0, std::size_t n, std::vector<double> table)
    : kind_(kind), c0_(c0), n_(n), table_(std::move(table)) {
  if (!(c0_ > 0.0 && c0_ <= 1.0)) throw std::invalid_argument("capacity c0 must lie in (0, 1]");
  if (n_ == 0) throw std::invalid_argument("capacity needs N >= 1");
}

CapacityFunction CapacityFunction::linear(double c0, std::size_t n) {
  return CapacityFunction(Kind::linear, c0, n, {});
}

CapacityFunction CapacityFunction::logarithmic(double c0, std::size_t n) {
  return CapacityFunction(Kind::logarithmic, c0, n, {});
}

CapacityFunction CapacityFunction::table(std::vector<double> values) {
  if (values.size() < 2) throw std::invalid_argument("capacity table needs at least 2 entries");
  if (values.front() != 0.0) throw std::invalid_argument("capacity table must start at 0");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw std::invalid_argument("capacity table must be strictly increasing");
    }
  }
  const double c0 = values.back();
  const std::size_t n = values.size() - 1;
  return CapacityFunction(Kind::table, c0, n, std::move(values));
}

double CapacityFunction::operator()(std::size_t i) const {
  if (i > n_) throw std::out_of_range("index beyond ensemble");
  switch (kind_) {
    case Kind::linear:
      return c0_ * static_cast<double>(i) / static_cast<double>(n_);
    case Kind::logarithmic:
      return c0_ * std::log(static_cast<double>(i) + 1.0) / std::log(static_cast<double>(n_) + 1.0);
    case Kind::table:
      return table_[i];
  }
  return 0.0;
}

CapacityFunction::Kind parse_capacity_kind(const std::string& name) {
  if (name == "linear") return CapacityFunction::Kind::linear;
  if (name == "logarithmic" || name == "log") return CapacityFunction::Kind::logarithmic;
  if (name == "table") return CapacityFunction::Kind::table;
  throw std::invalid_argument("unknown capacity function: " + name);
}

std::string to_string(CapacityFunction::Kind kind) {
  switch (kind) {
    case CapacityFunction::Kind::linear:
      return "linear";
    case CapacityFunction::Kind::logarithmic:
      return "logarithmic";
    case CapacityFunction::Kind::table:
      return "table";
  }
  return "?";
}

}  // namespace adiv
