#include "adiv/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "adiv/csv.hpp"

namespace adiv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) {
    throw std::invalid_argument("config: " + key + " expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string list_string(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

std::string num(double v) { return format_double(v); }

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define ADIV_U64(KEY, MEMBER)                                                                      \
  Field {                                                                                          \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },                       \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                      \
          c.MEMBER = static_cast<decltype(c.MEMBER)>(to_u64(k, v));                                \
        }                                                                                          \
  }
#define ADIV_REAL(KEY, MEMBER)                                                                     \
  Field {                                                                                          \
    KEY, [](const ExperimentConfig& c) { return num(c.MEMBER); },                                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.MEMBER = to_double(k, v); } \
  }
#define ADIV_TEXT(KEY, MEMBER)                                                                     \
  Field {                                                                                          \
    KEY, [](const ExperimentConfig& c) { return c.MEMBER; },                                       \
        [](ExperimentConfig& c, const std::string&, const std::string& v) { c.MEMBER = v; }        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ADIV_TEXT("task", task),
      Field{"divergence", [](const ExperimentConfig& c) { return to_string(c.divergence); },
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.divergence = parse_divergence(v); }},
      Field{"optimizer", [](const ExperimentConfig& c) { return to_string(c.optimizer); },
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.optimizer = parse_optimizer(v); }},
      ADIV_TEXT("jsd.backend", jsd_backend),
      ADIV_U64("budget", budget),
      ADIV_U64("repeats", repeats),
      ADIV_U64("seed", seed),
      ADIV_TEXT("output", output),
      ADIV_U64("threads", threads),
      ADIV_U64("gbdt.trees", gbdt.n_trees),
      ADIV_U64("gbdt.depth", gbdt.max_depth),
      ADIV_REAL("gbdt.shrinkage", gbdt.shrinkage),
      ADIV_U64("gbdt.min_leaf", gbdt.min_leaf),
      ADIV_REAL("ad.c0", c0),
      ADIV_TEXT("gap.tolerance", gap_tolerance),
      ADIV_U64("gap.min_n", gap_min_n),
      ADIV_U64("gap.max_n", gap_max_n),
      ADIV_TEXT("gap.policy", gap_policy),
      ADIV_U64("nn.hidden", nn.hidden),
      ADIV_REAL("nn.ema", nn.ema_coeff),
      ADIV_REAL("nn.r1", nn.r1_coeff),
      Field{"nn.r1_target", [](const ExperimentConfig& c) { return nn::to_string(c.nn.r1_target); },
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
              c.nn.r1_target = nn::parse_r1_target(v);
            }},
      ADIV_REAL("nn.lr", nn.lr),
      ADIV_U64("nn.batch", nn.batch),
      ADIV_U64("nn.patience", nn.patience),
      ADIV_REAL("nn.conv_tol", nn.conv_tol),
      ADIV_U64("nn.max_steps", nn.max_steps),
      ADIV_REAL("nn.zeta_max", nn.zeta_max),
      ADIV_U64("bo.init", bo.n_init),
      ADIV_U64("bo.candidates", bo.n_candidates),
      ADIV_U64("bo.refine_starts", bo.refine_starts),
      ADIV_U64("bo.refine_steps", bo.refine_steps),
      ADIV_U64("bo.iters", bo_iters),
      ADIV_U64("avo.draws", avo.draws),
      ADIV_REAL("avo.lr", avo.lr),
      ADIV_U64("avo.max_steps", avo.max_steps),
      ADIV_U64("avo.inner_steps", avo.inner_steps),
      ADIV_U64("avo.n_min", avo.n_min),
      ADIV_U64("avo.n_max", avo.n_max),
      ADIV_REAL("avo.gap_tolerance", avo.gap_tolerance),
      ADIV_REAL("avo.min_std", avo.min_std),
      Field{"avo.init", [](const ExperimentConfig& c) { return list_string(c.avo_init); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.avo_init = to_list(k, v); }},
      ADIV_REAL("avo.init_std", avo_init_std),
      Field{"estimate.psi", [](const ExperimentConfig& c) { return list_string(c.psi); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.psi = to_list(k, v); }},
  };
  return table;
}

#undef ADIV_U64
#undef ADIV_REAL
#undef ADIV_TEXT

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(where + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw std::invalid_argument(where + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::string to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::jsd:
      return "jsd";
    case DivergenceKind::ad_linear:
      return "ad-linear";
    case DivergenceKind::ad_log:
      return "ad-log";
    case DivergenceKind::ad_dropout:
      return "ad-dropout";
    case DivergenceKind::ad_l2:
      return "ad-l2";
  }
  return "?";
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::bo ? "bo" : "avo"; }
std::string to_string(Backend backend) { return backend == Backend::gbdt ? "gbdt" : "nn"; }

DivergenceKind parse_divergence(const std::string& name) {
  for (auto k : {DivergenceKind::jsd, DivergenceKind::ad_linear, DivergenceKind::ad_log,
                 DivergenceKind::ad_dropout, DivergenceKind::ad_l2}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown divergence: " + name);
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "bo") return OptimizerKind::bo;
  if (name == "avo") return OptimizerKind::avo;
  throw std::invalid_argument("unknown optimizer: " + name);
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& entries) {
  ExperimentConfig cfg;
  std::map<std::string, const Field*> by_key;
  for (const Field& f : fields()) by_key[f.key] = &f;
  for (const auto& [key, value] : entries) {
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second->set(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return from_map(parse_key_values(in, path));
}

Backend ExperimentConfig::backend() const {
  switch (divergence) {
    case DivergenceKind::ad_linear:
    case DivergenceKind::ad_log:
      return Backend::gbdt;
    case DivergenceKind::ad_dropout:
    case DivergenceKind::ad_l2:
      return Backend::nn;
    case DivergenceKind::jsd:
      break;
  }
  if (jsd_backend == "gbdt") return Backend::gbdt;
  if (jsd_backend == "nn") return Backend::nn;
  return optimizer == OptimizerKind::avo ? Backend::nn : Backend::gbdt;
}

GapCriterion ExperimentConfig::gap() const {
  GapCriterion g = backend() == Backend::gbdt ? GapCriterion::gbdt() : GapCriterion::nn();
  if (gap_tolerance != "auto") g.tolerance = to_double("gap.tolerance", gap_tolerance);
  if (gap_min_n) g.min_n = gap_min_n;
  if (gap_max_n) g.max_n = gap_max_n;
  if (gap_policy != "auto") g.policy = parse_growth_policy(gap_policy);
  return g;
}

std::vector<double> ExperimentConfig::init_mean() const {
  if (!avo_init.empty()) return avo_init;
  if (task == "detector") return DetectorTask::initial_guess();
  const auto t = make_task(task);
  const ParamBox box = t->bounds();
  std::vector<double> mid(box.dim());
  for (std::size_t k = 0; k < box.dim(); ++k) mid[k] = 0.5 * (box.lo[k] + box.hi[k]);
  return mid;
}

void ExperimentConfig::validate() const {
  const auto t = make_task(task);
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (budget == 0) throw std::invalid_argument("config: budget must be > 0");
  if (jsd_backend != "auto" && jsd_backend != "gbdt" && jsd_backend != "nn") {
    throw std::invalid_argument("config: jsd.backend must be auto, gbdt or nn");
  }
  if (!(c0 > 0.0 && c0 <= 1.0)) throw std::invalid_argument("config: ad.c0 must lie in (0, 1]");
  gbdt.validate();
  nn.validate();
  gap().validate();
  if (optimizer == OptimizerKind::avo) {
    if (backend() != Backend::nn) {
      throw std::invalid_argument("config: avo needs a neural-network divergence (" + to_string(divergence) +
                                  " is boosted)");
    }
    avo.validate();
    const auto mean = init_mean();
    if (mean.size() != t->bounds().dim()) throw std::invalid_argument("config: avo.init has the wrong dimension");
    if (!(avo_init_std > 0.0)) throw std::invalid_argument("config: avo.init_std must be > 0");
  } else if (bo.n_init < 2) {
    throw std::invalid_argument("config: bo.init must be >= 2");
  }
  if (!psi.empty() && psi.size() != t->bounds().dim()) {
    throw std::invalid_argument("config: estimate.psi has the wrong dimension");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

}  // namespace adiv
