// Command-line front end: estimate, optimize, compare, selftest.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adiv/config.hpp"
#include "adiv/csv.hpp"
#include "adiv/harness.hpp"
#include "adiv/selftest.hpp"
#include "adiv/simulators.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> repeats;
  std::optional<std::uint64_t> budget;

  void apply(adiv::ExperimentConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (out) cfg.output = *out;
    if (repeats) cfg.repeats = *repeats;
    if (budget) cfg.budget = *budget;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o, bool run_flags) {
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--out", o.out, "Output directory");
  if (run_flags) {
    cmd->add_option("--repeats", o.repeats, "Number of independent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--budget", o.budget, "Generator-sample budget per run")->check(CLI::PositiveNumber);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

int cmd_estimate(const std::string& config, const Overrides& o) {
  adiv::ExperimentConfig cfg = adiv::ExperimentConfig::load(config);
  o.apply(cfg);
  cfg.validate();
  const auto task = adiv::make_task(cfg.task);
  const std::vector<double> psi = cfg.psi.empty() ? task->nominal() : cfg.psi;
  const adiv::Evaluator eval = adiv::make_evaluator(cfg, *task);
  adiv::BudgetLedger ledger(cfg.budget);
  adiv::Rng rng(cfg.seed);
  const adiv::DivergenceEstimate est = eval(psi, ledger, rng);

  auto os = open_out(std::filesystem::path(cfg.output) / "estimate.csv");
  adiv::CsvWriter csv(os);
  adiv::write_provenance(csv, cfg);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < psi.size(); ++j) names.push_back("psi_" + std::to_string(j));
  for (const char* c : {"value", "alpha_used", "train_loss", "valid_loss", "samples_used", "ledger_total"}) {
    names.emplace_back(c);
  }
  csv.header(names);
  std::vector<std::string> cells;
  for (double v : psi) cells.push_back(adiv::format_double(v));
  for (double v : {est.value, est.alpha_used, est.train_loss, est.valid_loss}) cells.push_back(adiv::format_double(v));
  cells.push_back(std::to_string(est.samples_used));
  cells.push_back(std::to_string(ledger.total()));
  csv.row(cells);
  std::cout << adiv::format_double(est.value) << '\n';
  return 0;
}

int cmd_optimize(const std::string& config, const Overrides& o) {
  adiv::ExperimentConfig cfg = adiv::ExperimentConfig::load(config);
  o.apply(cfg);
  const adiv::ExperimentResult res = adiv::run_experiment(cfg);
  for (const adiv::RunResult& r : res.runs) {
    const double best = r.rows.empty() ? 0.0 : r.rows.back().best_error;
    std::cout << "replica " << r.replica << ": evaluations=" << r.rows.size()
              << " best_error=" << adiv::format_double(best) << '\n';
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& configs, const Overrides& o) {
  adiv::ExperimentConfig a = adiv::ExperimentConfig::load(configs.at(0));
  adiv::ExperimentConfig b = adiv::ExperimentConfig::load(configs.at(1));
  o.apply(a);
  o.apply(b);
  const std::filesystem::path root = o.out ? *o.out : a.output;
  a.output = (root / "a").string();
  b.output = (root / "b").string();
  if (a.task != b.task) throw std::invalid_argument("compare: task mismatch (" + a.task + " vs " + b.task + ")");
  const adiv::ExperimentResult ra = adiv::run_experiment(a);
  const adiv::ExperimentResult rb = adiv::run_experiment(b);
  const auto rows = adiv::compare(ra, rb);
  auto os = open_out(root / "compare.csv");
  adiv::write_compare_csv(os, a, b, rows);
  const auto& last = rows.back();
  std::cout << "samples=" << adiv::format_double(last.samples) << " median_a=" << adiv::format_double(last.median_a)
            << " median_b=" << adiv::format_double(last.median_b) << " ratio=" << adiv::format_double(last.ratio)
            << '\n';
  return 0;
}

int cmd_selftest(const Overrides& o) {
  const std::uint64_t seed = o.seed.value_or(1);
  const auto rows = adiv::run_selftest(seed);
  auto os = open_out(std::filesystem::path(o.out.value_or(".")) / "selftest.csv");
  adiv::write_selftest_csv(os, seed, rows);
  int failed = 0;
  for (const auto& r : rows) {
    std::cout << (r.passed ? "pass " : "FAIL ") << r.check << " (" << adiv::format_double(r.detail) << ")\n";
    failed += r.passed ? 0 : 1;
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-divergence parameter tuning for black-box simulators"};
  app.require_subcommand(1);

  std::string est_config;
  Overrides est_o;
  auto* est = app.add_subcommand("estimate", "Divergence between a task at psi and its ground truth");
  est->add_option("--config", est_config, "Config file")->required()->check(CLI::ExistingFile);
  add_overrides(est, est_o, false);
  est->add_option("--budget", est_o.budget, "Generator-sample budget")->check(CLI::PositiveNumber);

  std::string opt_config;
  Overrides opt_o;
  auto* optimize = app.add_subcommand("optimize", "Run one experiment config");
  optimize->add_option("--config", opt_config, "Config file")->required()->check(CLI::ExistingFile);
  add_overrides(optimize, opt_o, true);

  std::vector<std::string> cmp_configs;
  Overrides cmp_o;
  auto* cmp = app.add_subcommand("compare", "Run two configs and compare medians at matched budgets");
  cmp->add_option("--config", cmp_configs, "Config files (give twice: A then B)")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);
  add_overrides(cmp, cmp_o, true);

  Overrides self_o;
  auto* self = app.add_subcommand("selftest", "Run the invariant suite");
  add_overrides(self, self_o, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*est) return cmd_estimate(est_config, est_o);
    if (*optimize) return cmd_optimize(opt_config, opt_o);
    if (*cmp) return cmd_compare(cmp_configs, cmp_o);
    if (*self) return cmd_selftest(self_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
