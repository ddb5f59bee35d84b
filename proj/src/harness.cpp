#include "adiv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "adiv/bo.hpp"
#include "adiv/csv.hpp"
#include "adiv/gbdt.hpp"
#include "adiv/nn.hpp"

namespace adiv {

namespace {

nn::Variant nn_variant(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::ad_dropout:
      return nn::Variant::dropout;
    case DivergenceKind::ad_l2:
      return nn::Variant::l2;
    default:
      return nn::Variant::none;
  }
}

Trainer make_trainer(const ExperimentConfig& cfg) {
  if (cfg.backend() == Backend::nn) return nn::trainer(nn_variant(cfg.divergence), cfg.nn);
  gbdt::GbdtConfig g = cfg.gbdt;
  if (cfg.divergence == DivergenceKind::ad_linear) g.capacity = CapacityFunction::linear(cfg.c0, g.n_trees);
  if (cfg.divergence == DivergenceKind::ad_log) g.capacity = CapacityFunction::logarithmic(cfg.c0, g.n_trees);
  return g.capacity ? gbdt::boosted_trainer(g) : gbdt::jsd_trainer(g);
}

}  // namespace

Evaluator make_evaluator(const ExperimentConfig& cfg, const Task& task) {
  const Trainer trainer = make_trainer(cfg);
  const GapCriterion base = cfg.gap();
  const Sampler truth = task.ground_truth_sampler();
  return [trainer, base, truth, &task](std::span<const double> psi, BudgetLedger& ledger, Rng& rng) {
    // The search never probes sizes the remaining budget could not pay for.
    GapCriterion crit = base;
    bool capped = false;
    if (ledger.limit()) {
      const std::uint64_t affordable = ledger.remaining() / 4;
      if (affordable < crit.max_n) {
        if (affordable <= crit.min_n) throw BudgetExhausted(ledger.total(), 4 * crit.min_n, *ledger.limit());
        crit.max_n = static_cast<std::size_t>(affordable);
        capped = true;
      }
    }
    const Sampler model = task.sampler(std::vector<double>(psi.begin(), psi.end()));
    try {
      return min_training_size(trainer, truth, model, crit, ledger, rng).estimate;
    } catch (const GapNotReached&) {
      if (!capped) throw;
      throw BudgetExhausted(ledger.total(), 4 * static_cast<std::uint64_t>(crit.max_n), *ledger.limit());
    }
  };
}

// --- single run ----------------------------------------------------------------

namespace {

void fill_errors(const Task& task, std::vector<CurveRow>& rows, bool incumbent_is_current) {
  double best = std::numeric_limits<double>::infinity();
  double best_value = std::numeric_limits<double>::infinity();
  double incumbent = 0.0;
  for (CurveRow& r : rows) {
    r.error = task.error(r.psi);
    best = std::min(best, r.error);
    r.best_error = best;
    if (incumbent_is_current) {
      incumbent = r.error;
    } else if (r.value < best_value) {
      best_value = r.value;
      incumbent = r.error;
    }
    r.incumbent_error = incumbent;
  }
}

}  // namespace

RunResult run_replica(const ExperimentConfig& cfg, std::size_t replica) {
  const auto task = make_task(cfg.task);
  RunResult out;
  out.replica = replica;
  out.seed = cfg.seed + replica;
  Rng rng(out.seed);
  BudgetLedger ledger(cfg.budget);

  if (cfg.optimizer == OptimizerKind::bo) {
    const Evaluator eval = make_evaluator(cfg, *task);
    const opt::Objective objective = [&eval](std::span<const double> psi, BudgetLedger& l, Rng& r) {
      return eval(psi, l, r).value;
    };
    const opt::BoResult bo = opt::bo_run(objective, task->bounds(), cfg.bo_iters, ledger, rng, cfg.bo);
    out.budget_exhausted = bo.budget_exhausted;
    for (std::size_t i = 0; i < bo.history.size(); ++i) {
      CurveRow row;
      row.index = i;
      row.psi = bo.history[i].psi;
      row.value = bo.history[i].value;
      row.cumulative_samples = bo.history[i].cumulative_samples;
      out.rows.push_back(std::move(row));
    }
    fill_errors(*task, out.rows, false);
  } else {
    opt::AvoSettings settings = cfg.avo;
    settings.variant = nn_variant(cfg.divergence);
    settings.nn = cfg.nn;
    const opt::SearchDistribution init(cfg.init_mean(), cfg.avo_init_std);
    opt::AvoResult avo = opt::avo_run(*task, init, settings, ledger, rng);
    out.budget_exhausted = avo.budget_exhausted;
    for (const opt::AvoStep& s : avo.trajectory) {
      CurveRow row;
      row.index = s.step;
      row.psi = s.mu;
      row.value = s.value;
      row.cumulative_samples = s.cumulative_samples;
      out.rows.push_back(std::move(row));
    }
    fill_errors(*task, out.rows, true);
    out.avo = std::move(avo.trajectory);
  }
  return out;
}

// --- aggregation -------------------------------------------------------------------

std::optional<double> step_value(const RunResult& run, double samples) {
  std::optional<double> v;
  for (const CurveRow& r : run.rows) {
    if (static_cast<double>(r.cumulative_samples) > samples) break;
    v = r.best_error;
  }
  return v;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || hi < lo || count == 0) throw std::invalid_argument("log_grid: need 0 < lo <= hi");
  if (lo == hi || count == 1) return {lo};
  std::vector<double> g(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty data");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= xs.size()) return xs.back();
  return xs[i] + (h - static_cast<double>(i)) * (xs[i + 1] - xs[i]);
}

std::vector<BandPoint> aggregate(std::span<const RunResult> runs, std::span<const double> grid) {
  std::vector<BandPoint> out;
  for (double s : grid) {
    std::vector<double> vals;
    for (const RunResult& r : runs) {
      if (auto v = step_value(r, s)) vals.push_back(*v);
    }
    if (vals.empty()) continue;
    out.push_back({s, quantile(vals, 0.5), quantile(vals, 0.25), quantile(vals, 0.75)});
  }
  return out;
}

namespace {

constexpr std::size_t kGridPoints = 64;

// From the latest first evaluation (every run has a value there) to the budget.
std::optional<std::pair<double, double>> grid_range(std::span<const RunResult> runs, double budget) {
  double lo = 0.0;
  for (const RunResult& r : runs) {
    if (r.rows.empty()) return std::nullopt;
    lo = std::max(lo, static_cast<double>(r.rows.front().cumulative_samples));
  }
  if (runs.empty() || lo > budget) return std::nullopt;
  return std::make_pair(lo, budget);
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  body(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write) {
  cfg.validate();
  ExperimentResult result;
  result.cfg = cfg;
  result.runs.resize(cfg.repeats);
  std::vector<std::string> errors(cfg.repeats);

  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.repeats);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.repeats; i = next++) {
      try {
        result.runs[i] = run_replica(cfg, i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < cfg.repeats; ++i) {
    if (!errors[i].empty()) throw std::runtime_error("replica " + std::to_string(i) + " failed: " + errors[i]);
  }
  if (const auto range = grid_range(result.runs, static_cast<double>(cfg.budget))) {
    result.aggregate = aggregate(result.runs, log_grid(range->first, range->second, kGridPoints));
  }

  if (write) {
    const std::filesystem::path dir(cfg.output);
    std::filesystem::create_directories(dir);
    for (const RunResult& run : result.runs) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu.csv", run.replica);
      write_file(dir / name, [&](std::ostream& os) { write_run_csv(os, cfg, run); });
      if (!run.avo.empty()) {
        std::snprintf(name, sizeof name, "avo_%03zu.csv", run.replica);
        write_file(dir / name, [&](std::ostream& os) {
          CsvWriter csv(os);
          write_provenance(csv, cfg);
          opt::write_avo_csv(os, run.avo);
        });
      }
    }
    write_file(dir / "aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, cfg, result.aggregate); });
    write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, cfg, result.runs); });
  }
  return result;
}

std::vector<CompareRow> compare(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.cfg.task != b.cfg.task) {
    throw std::invalid_argument("compare: task mismatch (" + a.cfg.task + " vs " + b.cfg.task + ")");
  }
  const auto ra = grid_range(a.runs, static_cast<double>(a.cfg.budget));
  const auto rb = grid_range(b.runs, static_cast<double>(b.cfg.budget));
  if (!ra || !rb) throw std::invalid_argument("no common grid");
  const double lo = std::max(ra->first, rb->first);
  const double hi = std::min(ra->second, rb->second);
  if (lo > hi) throw std::invalid_argument("no common grid");
  const std::vector<double> grid = log_grid(lo, hi, kGridPoints);
  const auto band_a = aggregate(a.runs, grid);
  const auto band_b = aggregate(b.runs, grid);
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CompareRow r{grid[i], band_a[i].median, band_b[i].median, 1.0};
    if (r.median_a != r.median_b) r.ratio = r.median_a / r.median_b;
    rows.push_back(r);
  }
  return rows;
}

// --- output ----------------------------------------------------------------------

void write_provenance(CsvWriter& csv, const ExperimentConfig& cfg, const std::string& prefix) {
  for (const auto& [key, value] : cfg.entries()) {
    // Output location and worker count do not affect results.
    if (key == "output" || key == "threads") continue;
    csv.comment(prefix + key, value);
  }
  const auto task = make_task(cfg.task);
  auto list = [](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
    return s;
  };
  csv.comment(prefix + "task.nominal", list(task->nominal()));
  csv.comment(prefix + "task.lower", list(task->bounds().lo));
  csv.comment(prefix + "task.upper", list(task->bounds().hi));
  csv.comment(prefix + "accounting", "every generator draw counts, validation included");
}

void write_run_csv(std::ostream& os, const ExperimentConfig& cfg, const RunResult& run) {
  CsvWriter csv(os);
  write_provenance(csv, cfg);
  csv.comment("replica", std::to_string(run.replica));
  csv.comment("replica_seed", std::to_string(run.seed));
  csv.comment("budget_exhausted", run.budget_exhausted ? "true" : "false");
  const std::size_t dim = make_task(cfg.task)->bounds().dim();
  std::vector<std::string> names{"index"};
  for (std::size_t j = 0; j < dim; ++j) names.push_back("psi_" + std::to_string(j));
  for (const char* c : {"value", "cumulative_samples", "error", "best_error", "incumbent_error"}) names.emplace_back(c);
  csv.header(names);
  for (const CurveRow& r : run.rows) {
    std::vector<std::string> cells{std::to_string(r.index)};
    for (double v : r.psi) cells.push_back(format_double(v));
    cells.push_back(format_double(r.value));
    cells.push_back(std::to_string(r.cumulative_samples));
    cells.push_back(format_double(r.error));
    cells.push_back(format_double(r.best_error));
    cells.push_back(format_double(r.incumbent_error));
    csv.row(cells);
  }
}

void write_aggregate_csv(std::ostream& os, const ExperimentConfig& cfg, std::span<const BandPoint> band) {
  CsvWriter csv(os);
  write_provenance(csv, cfg);
  csv.header({"samples", "median", "q25", "q75"});
  for (const BandPoint& p : band) csv.row(p.samples, p.median, p.q25, p.q75);
}

void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg, std::span<const RunResult> runs) {
  CsvWriter csv(os);
  write_provenance(csv, cfg);
  csv.header({"replica", "seed", "evaluations", "final_samples", "final_best_error", "final_incumbent_error",
              "budget_exhausted"});
  for (const RunResult& r : runs) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const CurveRow* last = r.rows.empty() ? nullptr : &r.rows.back();
    csv.row(r.replica, r.seed, r.rows.size(), last ? last->cumulative_samples : 0,
            last ? last->best_error : nan, last ? last->incumbent_error : nan,
            std::string(r.budget_exhausted ? "true" : "false"));
  }
}

void write_compare_csv(std::ostream& os, const ExperimentConfig& a, const ExperimentConfig& b,
                       std::span<const CompareRow> rows) {
  CsvWriter csv(os);
  write_provenance(csv, a, "a.");
  write_provenance(csv, b, "b.");
  csv.header({"samples", "median_a", "median_b", "ratio"});
  for (const CompareRow& r : rows) csv.row(r.samples, r.median_a, r.median_b, r.ratio);
}

}  // namespace adiv
