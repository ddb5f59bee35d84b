#include <filesystem>
#include <fstream>
#include <sstream>

#include "adiv/config.hpp"
#include "adiv/harness.hpp"
#include "doctest.h"

using namespace adiv;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return ExperimentConfig::from_map(parse_key_values(in, "test"));
}

RunResult curve(std::initializer_list<std::pair<std::uint64_t, double>> pts) {
  RunResult r;
  for (auto [s, e] : pts) {
    CurveRow row;
    row.cumulative_samples = s;
    row.best_error = e;
    r.rows.push_back(row);
  }
  return r;
}

ExperimentConfig tiny_bo() {
  return parse(
      "task = xor\n"
      "divergence = ad-linear\n"
      "budget = 20000\n"
      "repeats = 2\n"
      "seed = 3\n"
      "threads = 1\n"
      "gbdt.trees = 10\n");
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("key-value parsing") {
    std::istringstream in("# comment\n a = 1 \n\nb=two # trailing\n");
    const auto m = parse_key_values(in, "t");
    CHECK(m.at("a") == "1");
    CHECK(m.at("b") == "two");
    std::istringstream dup("a = 1\na = 2\n");
    CHECK_THROWS(parse_key_values(dup, "t"));
    std::istringstream bad("just words\n");
    CHECK_THROWS(parse_key_values(bad, "t"));
  }

  TEST_CASE("config values and validation") {
    const ExperimentConfig cfg = tiny_bo();
    CHECK(cfg.divergence == DivergenceKind::ad_linear);
    CHECK(cfg.backend() == Backend::gbdt);
    CHECK(cfg.gbdt.n_trees == 10);
    CHECK(cfg.gap().tolerance == GapCriterion::gbdt().tolerance);
    CHECK_THROWS(parse("nonsense = 1\n"));
    CHECK_THROWS(parse("budget = -4\n"));
    CHECK_THROWS(parse("optimizer = avo\ndivergence = ad-log\n").validate());
    CHECK(parse("optimizer = avo\n").backend() == Backend::nn);
    CHECK(parse("task = detector\n").init_mean() == DetectorTask::initial_guess());
  }

  TEST_CASE("shipped configs load and validate") {
    std::size_t count = 0;
    for (const auto& e : std::filesystem::directory_iterator(ADIV_CONFIG_DIR)) {
      if (e.path().extension() != ".cfg") continue;
      CAPTURE(e.path().string());
      CHECK_NOTHROW(ExperimentConfig::load(e.path().string()).validate());
      ++count;
    }
    CHECK(count >= 7);
  }

  TEST_CASE("entries round-trip through the parser") {
    ExperimentConfig cfg = tiny_bo();
    cfg.nn.r1_target = nn::R1Target::logit;
    std::string text;
    for (const auto& [k, v] : cfg.entries()) text += k + " = " + v + "\n";
    CHECK(parse(text).entries() == cfg.entries());
  }

  TEST_CASE("step values and quantiles") {
    const RunResult r = curve({{100, 3.0}, {200, 2.0}, {400, 0.5}});
    CHECK_FALSE(step_value(r, 99).has_value());
    CHECK(*step_value(r, 100) == 3.0);
    CHECK(*step_value(r, 399) == 2.0);
    CHECK(*step_value(r, 1e9) == 0.5);
    CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({7}, 0.9) == 7.0);
    CHECK_THROWS(quantile({}, 0.5));
    const auto g = log_grid(10, 1000, 3);
    CHECK(g[1] == doctest::Approx(100));
    CHECK(log_grid(5, 5, 10).size() == 1);
  }

  TEST_CASE("aggregate bands") {
    const std::vector<RunResult> runs{curve({{10, 1.0}}), curve({{10, 3.0}}), curve({{10, 2.0}, {20, 0.0}})};
    const std::vector<double> grid{5, 10, 20};
    const auto band = aggregate(runs, grid);
    REQUIRE(band.size() == 2);
    CHECK(band[0].median == 2.0);
    CHECK(band[1].median == 1.0);
    CHECK(band[1].q25 == 0.5);
  }

  TEST_CASE("compare needs overlapping grids and matching tasks") {
    ExperimentResult a, b;
    a.cfg.budget = 100;
    b.cfg.budget = 100000;
    a.runs = {curve({{50, 1.0}})};
    b.runs = {curve({{5000, 1.0}})};
    CHECK_THROWS_WITH(compare(a, b), "no common grid");
    b.runs = {curve({{60, 2.0}})};
    const auto rows = compare(a, b);
    REQUIRE(!rows.empty());
    CHECK(rows.back().ratio == doctest::Approx(0.5));
    b.cfg.task = "roll";
    CHECK_THROWS(compare(a, b));
  }

  TEST_CASE("a small experiment writes deterministic outputs") {
    const auto dir = std::filesystem::temp_directory_path() / "adiv_harness_test";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg = tiny_bo();
    cfg.output = dir.string();
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.runs.size() == 2);
    for (const RunResult& r : res.runs) {
      REQUIRE(!r.rows.empty());
      CHECK(r.rows.back().cumulative_samples <= cfg.budget);
      double best = 1e9;
      for (const CurveRow& row : r.rows) {
        best = std::min(best, row.error);
        CHECK(row.best_error == best);
      }
    }
    for (const char* f : {"run_000.csv", "run_001.csv", "aggregate.csv", "summary.csv"}) {
      CHECK(std::filesystem::exists(dir / f));
    }
    const ExperimentResult again = run_experiment(cfg, false);
    for (std::size_t i = 0; i < 2; ++i) {
      std::ostringstream x, y;
      write_run_csv(x, cfg, res.runs[i]);
      write_run_csv(y, cfg, again.runs[i]);
      CHECK(x.str() == y.str());
    }
    std::filesystem::remove_all(dir);
  }
}
