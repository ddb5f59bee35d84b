// Acceptance runner. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero on FAIL.
//
//   adiv_acceptance --criterion N --cli PATH --work DIR

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/nn_oracle.hpp"
#include "CLI11.hpp"
#include "adiv/config.hpp"
#include "adiv/gbdt.hpp"
#include "adiv/gp.hpp"
#include "adiv/harness.hpp"
#include "adiv/nn.hpp"
#include "adiv/simulators.hpp"

namespace fs = std::filesystem;
using namespace adiv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::string cli;
  fs::path work;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

// --- 1: XOR estimates at n = 4096 ----------------------------------------------

Outcome criterion1(const Context&) {
  XorTask task;
  gbdt::GbdtConfig g;
  gbdt::GbdtConfig lin = g, lg = g;
  lin.capacity = CapacityFunction::linear(0.25, g.n_trees);
  lg.capacity = CapacityFunction::logarithmic(0.25, g.n_trees);
  nn::NnConfig nc;
  nc.r1_coeff = 1.0;
  const std::vector<std::pair<std::string, Trainer>> trainers{
      {"jsd-gbdt", gbdt::jsd_trainer(g)},
      {"ad-linear", gbdt::boosted_trainer(lin)},
      {"ad-log", gbdt::boosted_trainer(lg)},
      {"ad-dropout", nn::trainer(nn::Variant::dropout, nc)},
      {"ad-l2", nn::trainer(nn::Variant::l2, nc)}};
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (const auto& [name, trainer] : trainers) {
    int near_zero = 0, separated = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      BudgetLedger l0, l1;
      Rng r0(100 + s), r1(100 + s);
      const double v0 =
          estimate_at(trainer, task.ground_truth_sampler(), task.sampler({0.0}), 4096, l0, r0).value;
      const double v1 = estimate_at(trainer, task.ground_truth_sampler(), task.sampler({std::numbers::pi / 2}),
                                    4096, l1, r1)
                            .value;
      near_zero += std::abs(v0) <= 0.02;
      separated += v1 >= 0.15;
    }
    const bool ok = near_zero >= 18 && separated >= 18;
    pass = pass && ok;
    detail += name + " " + std::to_string(near_zero) + "/20," + std::to_string(separated) + "/20; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pass = pass && secs < 300;
  return {pass, detail + "time " + fmt(secs) + "s"};
}

// --- 2: XOR BO, AD vs JSD ------------------------------------------------------

ExperimentConfig xor_bo(DivergenceKind kind, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.task = "xor";
  cfg.divergence = kind;
  cfg.optimizer = OptimizerKind::bo;
  cfg.budget = 200000;
  cfg.repeats = 20;
  cfg.seed = 2024;
  cfg.c0 = 0.25;
  cfg.output = out.string();
  return cfg;
}

std::vector<double> final_incumbent_errors(const ExperimentResult& res) {
  std::vector<double> errs;
  for (const RunResult& r : res.runs) errs.push_back(r.rows.empty() ? INFINITY : r.rows.back().incumbent_error);
  return errs;
}

Outcome criterion2(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const double jsd = median(final_incumbent_errors(run_experiment(xor_bo(DivergenceKind::jsd, ctx.work / "c2_jsd"))));
  const double lin =
      median(final_incumbent_errors(run_experiment(xor_bo(DivergenceKind::ad_linear, ctx.work / "c2_lin"))));
  const double lg = median(final_incumbent_errors(run_experiment(xor_bo(DivergenceKind::ad_log, ctx.work / "c2_log"))));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = lin <= 0.5 * jsd && lg <= 0.5 * jsd && secs < 1800;
  return {pass, "median |theta-theta*| jsd " + fmt(jsd) + ", ad-linear " + fmt(lin) + ", ad-log " + fmt(lg) +
                    "; time " + fmt(secs) + "s"};
}

// --- 3: detector AVO -----------------------------------------------------------

ExperimentConfig detector_avo(DivergenceKind kind, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.task = "detector";
  cfg.divergence = kind;
  cfg.optimizer = OptimizerKind::avo;
  cfg.jsd_backend = "nn";
  cfg.budget = 500000;
  cfg.repeats = 10;
  cfg.seed = 7;
  cfg.nn.hidden = 32;
  cfg.nn.r1_coeff = 10.0;
  cfg.avo.lr = 1e-2;
  cfg.avo_init = DetectorTask::initial_guess();
  cfg.output = out.string();
  return cfg;
}

double median_final_mean_norm(const ExperimentResult& res) {
  std::vector<double> norms;
  for (const RunResult& r : res.runs) norms.push_back(r.rows.empty() ? INFINITY : r.rows.back().error);
  return median(norms);
}

Outcome criterion3(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const double drop = median_final_mean_norm(run_experiment(detector_avo(DivergenceKind::ad_dropout, ctx.work / "c3_drop")));
  const double l2 = median_final_mean_norm(run_experiment(detector_avo(DivergenceKind::ad_l2, ctx.work / "c3_l2")));
  const double jsd = median_final_mean_norm(run_experiment(detector_avo(DivergenceKind::jsd, ctx.work / "c3_jsd")));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = drop <= 0.3 && l2 <= 0.3 && jsd >= 1.5 * std::max(drop, l2) && secs < 3600;
  return {pass, "median ||mu|| ad-dropout " + fmt(drop) + ", ad-l2 " + fmt(l2) + ", jsd " + fmt(jsd) + "; time " +
                    fmt(secs) + "s"};
}

// --- 4: minimal training size --------------------------------------------------

Outcome criterion4(const Context&) {
  Rng pick(404);
  const std::vector<std::string> tasks{"xor", "roll"};
  nn::NnConfig nc;
  nc.r1_coeff = 1.0;
  const std::vector<std::tuple<std::string, Trainer, GapCriterion>> backends{
      {"gbdt", gbdt::jsd_trainer({}), GapCriterion::gbdt()},
      {"nn", nn::trainer(nn::Variant::none, nc), GapCriterion::nn()}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, trainer, crit] : backends) {
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto task = make_task(tasks[pick.below(tasks.size())]);
      const ParamBox box = task->bounds();
      const double theta = pick.uniform(box.lo[0], box.hi[0]);
      BudgetLedger ledger;
      Rng rng(1000 + static_cast<std::uint64_t>(k));
      try {
        const SizedEstimate s =
            min_training_size(trainer, task->ground_truth_sampler(), task->sampler({theta}), crit, ledger, rng);
        const bool good = s.estimate.gap() <= crit.tolerance && s.n >= crit.min_n && s.n <= crit.max_n &&
                          ledger.total() == 4 * s.n && s.estimate.samples_used == 4 * s.n;
        worst = std::max(worst, s.estimate.gap());
        ok += good;
      } catch (const GapNotReached& e) {
        worst = std::max(worst, e.best_gap());
      }
    }
    pass = pass && ok == 20;
    detail += name + " " + std::to_string(ok) + "/20 (max gap " + fmt(worst) + "); ";
  }
  return {pass, detail};
}

// --- 5: oracle equivalences ----------------------------------------------------

double dense_gp_mismatch(Rng& rng) {
  const std::size_t n = 2 + rng.below(19);
  const std::size_t d = 1 + rng.below(3);
  std::vector<std::vector<double>> xs(n, std::vector<double>(d));
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : xs[i]) v = rng.uniform();
    ys[i] = std::cos(4 * xs[i][0]) + 0.2 * rng.normal();
  }
  const opt::GpModel gp = opt::gp_fit(xs, ys);
  const double ell = gp.length_scale(), s2 = gp.signal_variance(), sc = gp.target_scale();
  auto k = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) r2 += (a[j] - b[j]) * (a[j] - b[j]);
    const double t = std::sqrt(3.0 * r2) / ell;
    return s2 * (1 + t) * std::exp(-t);
  };
  Eigen::MatrixXd kk(n, n);
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) kk(i, j) = k(xs[i], xs[j]);
    kk(i, i) += gp.noise();
    z(i) = (ys[i] - gp.target_mean()) / sc;
  }
  const auto lu = kk.fullPivLu();
  const Eigen::VectorXd w = lu.solve(z);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform();
    Eigen::VectorXd ks(n);
    for (std::size_t i = 0; i < n; ++i) ks(i) = k(x, xs[i]);
    const double mean = gp.target_mean() + sc * ks.dot(w);
    const double var = std::max(0.0, s2 - ks.dot(lu.solve(ks))) * sc * sc;
    const opt::Posterior post = gp.predict(x);
    worst = std::max(worst, std::abs(post.mean - mean) / std::max(1.0, std::abs(mean)));
    worst = std::max(worst, std::abs(post.var - var) / std::max(1.0, var));
  }
  return worst;
}

std::optional<std::size_t> scan_stop(const std::vector<double>& losses, const CapacityFunction& c) {
  for (std::size_t i = 1; i <= losses.size(); ++i) {
    if (losses[i - 1] <= c(i) * kLn2) return i;
  }
  return std::nullopt;
}

Outcome criterion5(const Context&) {
  Rng rng(505);
  double gp_worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) gp_worst = std::max(gp_worst, dense_gp_mismatch(rng));

  int stop_match = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> losses(n);
    double level = kLn2 * rng.uniform(0.5, 1.2);
    for (double& v : losses) {
      level *= rng.uniform(0.9, 1.02);
      v = level;
    }
    const double c0 = rng.uniform(0.05, 0.9);
    const CapacityFunction c =
        rng.bernoulli(0.5) ? CapacityFunction::linear(c0, n) : CapacityFunction::logarithmic(c0, n);
    stop_match += gbdt::boosted_stop_index(losses, c) == scan_stop(losses, c);
  }

  double fd_worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rng.below(4), h = 1 + rng.below(6);
    nn::Mlp net(d, h, rng);
    for (double& p : net.params()) p += 0.2 * rng.normal();
    const Dataset bp = test::random_rows(2 + rng.below(5), d, rng);
    const Dataset bq = test::random_rows(2 + rng.below(5), d, rng);
    const nn::Variant v = rep % 3 == 0 ? nn::Variant::none : rep % 3 == 1 ? nn::Variant::dropout : nn::Variant::l2;
    const nn::Regularization reg{v, v == nn::Variant::dropout ? 0.3 : v == nn::Variant::l2 ? 1.5 : 0.0};
    const nn::R1Target target = rep % 2 ? nn::R1Target::logit : nn::R1Target::output;
    fd_worst = std::max(fd_worst, test::fd_check(net, bp, bq, reg, 10.0, target, 1 + rep).max_rel);
  }
  const bool pass = gp_worst <= 1e-8 && stop_match == 100 && fd_worst <= 1e-4;
  return {pass, "gp " + fmt(gp_worst) + ", stop index " + std::to_string(stop_match) + "/100, nn fd " + fmt(fd_worst)};
}

// --- 6: monotonicity -----------------------------------------------------------

Outcome criterion6(const Context&) {
  XorTask task;
  int gbdt_ok = 0;
  double worst_rise = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    BudgetLedger ledger;
    Rng rng(600 + s);
    const SplitSample split = draw_split(task.ground_truth_sampler(), task.sampler({0.3 + 0.1 * s}), 512, rng, ledger);
    const gbdt::BoostResult res = gbdt::boosted_ad(split, {});
    double rise = 0.0;
    for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
      rise = std::max(rise, res.trajectory[i].train_loss - res.trajectory[i - 1].train_loss);
    }
    worst_rise = std::max(worst_rise, rise);
    gbdt_ok += rise <= 1e-6;
  }

  int l2_ok = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    BudgetLedger ledger;
    Rng data(700 + s);
    const SplitSample split = draw_split(task.ground_truth_sampler(), task.sampler({std::numbers::pi / 2}), 512, data, ledger);
    nn::NnConfig strong, weak;
    strong.r1_coeff = weak.r1_coeff = 1.0;
    strong.fixed_zeta = 10.0;
    weak.fixed_zeta = 0.01;
    Rng a(s), b(s);
    const double ns = nn::ad_nn(split, nn::Variant::l2, strong, a).net.weight_norm_sq();
    const double nw = nn::ad_nn(split, nn::Variant::l2, weak, b).net.weight_norm_sq();
    l2_ok += ns < nw;
  }
  const bool pass = gbdt_ok == 20 && l2_ok == 10;
  return {pass, "gbdt loss nonincreasing " + std::to_string(gbdt_ok) + "/20 (max rise " + fmt(worst_rise) +
                    "), l2 ordering " + std::to_string(l2_ok) + "/10"};
}

// --- 7: CLI determinism --------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

// Every regular file under `dir`, relative paths in sorted order.
std::vector<fs::path> listing(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion7(const Context& ctx) {
  const fs::path root = ctx.work / "c7";
  fs::remove_all(root);
  write_text(root / "estimate.cfg", "task = xor\ndivergence = ad-linear\nbudget = 100000\nestimate.psi = 0.7\n");
  write_text(root / "bo.cfg",
             "task = xor\ndivergence = ad-log\nbudget = 15000\nrepeats = 3\nthreads = 3\ngbdt.trees = 20\n");
  write_text(root / "avo.cfg",
             "task = xor\ndivergence = ad-dropout\noptimizer = avo\nbudget = 8000\nrepeats = 2\nthreads = 2\n"
             "avo.inner_steps = 5\nnn.r1 = 1\n");
  write_text(root / "jsd.cfg", "task = xor\ndivergence = jsd\nbudget = 15000\nrepeats = 2\ngbdt.trees = 20\n");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", "estimate --config " + quote(root / "estimate.cfg")},
      {"optimize-bo", "optimize --config " + quote(root / "bo.cfg")},
      {"optimize-avo", "optimize --config " + quote(root / "avo.cfg")},
      {"compare", "compare --config " + quote(root / "jsd.cfg") + " " + quote(root / "bo.cfg")},
      {"selftest", "selftest --seed 3"}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, args] : commands) {
    std::vector<fs::path> dirs{root / (name + "_1"), root / (name + "_2")};
    bool ran = true;
    for (const fs::path& d : dirs) {
      const std::string cmd = quote(ctx.cli) + " " + args + " --out " + quote(d) + " > " + quote(root / (name + ".log")) + " 2>&1";
      ran = ran && std::system(cmd.c_str()) == 0;
    }
    bool same = ran && fs::exists(dirs[0]);
    std::size_t files = 0;
    if (same) {
      const auto a = listing(dirs[0]), b = listing(dirs[1]);
      same = a == b;
      for (std::size_t i = 0; same && i < a.size(); ++i) {
        if (a[i].extension() != ".csv") continue;
        ++files;
        same = slurp(dirs[0] / a[i]) == slurp(dirs[1] / a[i]);
      }
      same = same && files > 0;
    }
    pass = pass && same;
    detail += name + (same ? " identical (" + std::to_string(files) + " csv)" : ran ? " DIFFERS" : " FAILED TO RUN") + "; ";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int criterion = 0;
  Context ctx;
  std::string work = "acceptance_work";
  app.add_option("--criterion", criterion, "Criterion number (1-7)")->required()->check(CLI::Range(1, 7));
  app.add_option("--cli", ctx.cli, "Path to the adiv CLI binary");
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<std::function<Outcome(const Context&)>> checks{criterion1, criterion2, criterion3, criterion4,
                                                                   criterion5, criterion6, criterion7};
  Outcome out;
  try {
    out = checks[static_cast<std::size_t>(criterion - 1)](ctx);
  } catch (const std::exception& e) {
    out = {false, std::string("error: ") + e.what()};
  }
  std::cout << "criterion " << criterion << ": " << (out.pass ? "PASS" : "FAIL") << "  " << out.detail << std::endl;
  return out.pass ? 0 : 1;
}
