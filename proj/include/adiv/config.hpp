#pragma once
// Experiment configuration: a flat "key = value" text file with dotted keys.
// '#' starts a comment. Unknown keys are errors.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adiv/bo.hpp"
#include "adiv/divergence.hpp"
#include "adiv/gbdt.hpp"
#include "adiv/nn.hpp"
#include "adiv/vo.hpp"

namespace adiv {

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source);

enum class DivergenceKind { jsd, ad_linear, ad_log, ad_dropout, ad_l2 };
enum class OptimizerKind { bo, avo };
enum class Backend { gbdt, nn };

std::string to_string(DivergenceKind kind);
std::string to_string(OptimizerKind kind);
std::string to_string(Backend backend);
DivergenceKind parse_divergence(const std::string& name);
OptimizerKind parse_optimizer(const std::string& name);

struct ExperimentConfig {
  std::string task = "xor";
  DivergenceKind divergence = DivergenceKind::jsd;
  OptimizerKind optimizer = OptimizerKind::bo;
  std::string jsd_backend = "auto";  // gbdt, nn, or auto (gbdt for bo, nn for avo)
  std::uint64_t budget = 200000;
  std::size_t repeats = 20;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::size_t threads = 0;  // 0: hardware concurrency

  gbdt::GbdtConfig gbdt;
  double c0 = 0.25;
  std::string gap_tolerance = "auto";  // per backend when "auto"
  std::size_t gap_min_n = 0;           // 0: backend default
  std::size_t gap_max_n = 0;
  std::string gap_policy = "auto";

  nn::NnConfig nn;
  opt::BoSettings bo;
  std::size_t bo_iters = 100000;  // the budget normally ends the run
  opt::AvoSettings avo;
  std::vector<double> avo_init;  // empty: task default
  double avo_init_std = 0.1;

  std::vector<double> psi;  // parameter for the estimate subcommand

  static ExperimentConfig from_map(const std::map<std::string, std::string>& entries);
  static ExperimentConfig load(const std::string& path);

  Backend backend() const;
  GapCriterion gap() const;
  std::vector<double> init_mean() const;
  void validate() const;
  // Every effective setting, defaults included, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

}  // namespace adiv
