#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace adiv {

// Maps an ensemble size i in [0, N] onto a capacity in [0, c0].
//   linear:       c(i) = c0 * i / N
//   logarithmic:  c(i) = c0 * log(i + 1) / log(N + 1)
//   table:        user-supplied values c(0..N), strictly increasing from 0
class CapacityFunction {
 public:
  enum class Kind { linear, logarithmic, table };

  static CapacityFunction linear(double c0, std::size_t n);
  static CapacityFunction logarithmic(double c0, std::size_t n);
  static CapacityFunction table(std::vector<double> values);

  Kind kind() const { return kind_; }
  double c0() const { return c0_; }
  std::size_t max_index() const { return n_; }

  // Throws std::out_of_range("index beyond ensemble") when i > N.
  double operator()(std::size_t i) const;

 private:
  CapacityFunction(Kind kind, double c0, std::size_t n, std::vector<double> table);

  Kind kind_;
  double c0_;
  std::size_t n_;
  std::vector<double> table_;
};

CapacityFunction::Kind parse_capacity_kind(const std::string& name);
std::string to_string(CapacityFunction::Kind kind);

}  // namespace adiv
