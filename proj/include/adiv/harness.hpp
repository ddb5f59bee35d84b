#pragma once
// Repeated budgeted optimization runs, convergence-curve aggregation and
// AD-vs-JSD comparison. Every generator draw, validation included, counts
// toward the budget.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adiv/config.hpp"
#include "adiv/csv.hpp"
#include "adiv/divergence.hpp"
#include "adiv/simulators.hpp"
#include "adiv/vo.hpp"

namespace adiv {

using Evaluator = std::function<DivergenceEstimate(std::span<const double> psi, BudgetLedger& ledger, Rng& rng)>;

// Divergence between the task at psi and fresh ground truth, as configured.
Evaluator make_evaluator(const ExperimentConfig& cfg, const Task& task);

// One row per divergence evaluation (bo) or per search-distribution step
// (avo, where psi is the mean).
struct CurveRow {
  std::size_t index = 0;
  std::vector<double> psi;
  double value = 0.0;
  std::uint64_t cumulative_samples = 0;
  double error = 0.0;            // |psi - psi*|
  double best_error = 0.0;       // running minimum of error
  double incumbent_error = 0.0;  // bo: error at the lowest divergence so far; avo: error of the mean
};

struct RunResult {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::vector<CurveRow> rows;
  std::vector<opt::AvoStep> avo;
  bool budget_exhausted = false;
};

struct BandPoint {
  double samples = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  std::vector<RunResult> runs;
  std::vector<BandPoint> aggregate;
};

RunResult run_replica(const ExperimentConfig& cfg, std::size_t replica);

// Runs all replicas on a worker pool, aggregates the best-so-far curves and,
// when `write` is set, writes run_NNN.csv, aggregate.csv and summary.csv into
// cfg.output. Throws if any replica failed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true);

// Right-continuous step value of the best-so-far curve; empty before the
// first evaluation.
std::optional<double> step_value(const RunResult& run, double samples);

// count points log-spaced on [lo, hi]; a single point when lo == hi.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

// Linear-interpolation quantile of unsorted data (type 7).
double quantile(std::vector<double> xs, double q);

// Median, q25 and q75 of the runs' best-so-far curves on `grid`.
std::vector<BandPoint> aggregate(std::span<const RunResult> runs, std::span<const double> grid);

struct CompareRow {
  double samples = 0.0;
  double median_a = 0.0;
  double median_b = 0.0;
  double ratio = 1.0;  // median_a / median_b
};

// Medians at matched budgets over the overlap of both experiments' grids.
// Throws on mismatched tasks and "no common grid" when the ranges are disjoint.
std::vector<CompareRow> compare(const ExperimentResult& a, const ExperimentResult& b);

void write_run_csv(std::ostream& os, const ExperimentConfig& cfg, const RunResult& run);
void write_aggregate_csv(std::ostream& os, const ExperimentConfig& cfg, std::span<const BandPoint> band);
void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg, std::span<const RunResult> runs);
void write_compare_csv(std::ostream& os, const ExperimentConfig& a, const ExperimentConfig& b,
                       std::span<const CompareRow> rows);
// The "# key = value" provenance block shared by every output file.
void write_provenance(CsvWriter& csv, const ExperimentConfig& cfg, const std::string& prefix = "");

}  // namespace adiv
