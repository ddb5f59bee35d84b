#pragma once
// Quick invariant checks exposed through the CLI. Each check is seeded and
// deterministic; `detail` carries the measured quantity.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace adiv {

struct SelftestRow {
  std::string check;
  bool passed = false;
  double detail = 0.0;
};

std::vector<SelftestRow> run_selftest(std::uint64_t seed);
void write_selftest_csv(std::ostream& os, std::uint64_t seed, const std::vector<SelftestRow>& rows);

}  // namespace adiv
