#include "adiv/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>

#include "adiv/csv.hpp"

namespace adiv::gbdt {

void GbdtConfig::validate() const {
  if (n_trees == 0) throw std::invalid_argument("gbdt: n_trees must be >= 1");
  if (max_depth == 0) throw std::invalid_argument("gbdt: max_depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw std::invalid_argument("gbdt: shrinkage must lie in (0, 1]");
  if (min_leaf == 0) throw std::invalid_argument("gbdt: min_leaf must be >= 1");
  if (capacity && capacity->max_index() != n_trees) {
    throw std::invalid_argument("gbdt: capacity N must equal n_trees");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes_[k].feature >= 0) {
    const TreeNode& n = nodes_[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes_[k].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes_[k].right)] = d[k] + 1;
    }
    best = std::max(best, d[k]);
  }
  return best;
}

void RegressionTree::scale(double factor) {
  for (TreeNode& n : nodes_) {
    if (n.feature < 0) n.value *= factor;
  }
}

namespace {

// Per-feature row orders, computed once per training set and reused for every
// tree of an ensemble.
class TreeBuilder {
 public:
  explicit TreeBuilder(const Dataset& xs) : xs_(xs), order_(xs.cols()) {
    for (std::size_t f = 0; f < xs.cols(); ++f) {
      auto& ord = order_[f];
      ord.resize(xs.rows());
      std::iota(ord.begin(), ord.end(), 0U);
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return xs(a, f) < xs(b, f); });
    }
  }

  RegressionTree build(std::span<const double> g, std::span<const double> h, const GbdtConfig& cfg) const {
    const std::size_t n = xs_.rows();
    std::vector<TreeNode> nodes(1);
    std::vector<int> node_of(n, 0);
    std::vector<int> active{0};
    const bool splittable = n >= 2 * cfg.min_leaf;

    for (std::size_t depth = 0; depth <= cfg.max_depth && !active.empty(); ++depth) {
      // Totals per node, indexed by node id.
      std::vector<NodeStats> stats(nodes.size());
      for (std::size_t r = 0; r < n; ++r) {
        if (node_of[r] < 0) continue;
        NodeStats& s = stats[static_cast<std::size_t>(node_of[r])];
        s.g += g[r];
        s.h += h[r];
        ++s.count;
      }
      std::vector<char> is_active(nodes.size(), 0);
      for (int k : active) is_active[static_cast<std::size_t>(k)] = 1;

      std::vector<Split> best(nodes.size());
      if (depth < cfg.max_depth && splittable) {
        for (std::size_t f = 0; f < xs_.cols(); ++f) scan_feature(f, g, h, cfg, node_of, is_active, stats, best);
      }

      std::vector<int> next;
      for (int k : active) {
        const auto ku = static_cast<std::size_t>(k);
        const Split& b = best[ku];
        if (b.feature < 0) {
          nodes[ku].value = -stats[ku].g / (stats[ku].h + kLeafDamping);
          continue;
        }
        const int left = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes.push_back({});
        nodes[ku].feature = b.feature;
        nodes[ku].threshold = b.threshold;
        nodes[ku].left = left;
        nodes[ku].right = left + 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      for (std::size_t r = 0; r < n; ++r) {
        const int k = node_of[r];
        if (k < 0) continue;
        const TreeNode& nd = nodes[static_cast<std::size_t>(k)];
        if (nd.feature < 0) {
          node_of[r] = -1;
        } else {
          node_of[r] = xs_(r, static_cast<std::size_t>(nd.feature)) < nd.threshold ? nd.left : nd.right;
        }
      }
      active = std::move(next);
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;
  };
  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Running {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;
    double last = 0.0;
  };

  void scan_feature(std::size_t f, std::span<const double> g, std::span<const double> h,
                    const GbdtConfig& cfg, const std::vector<int>& node_of,
                    const std::vector<char>& is_active, const std::vector<NodeStats>& stats,
                    std::vector<Split>& best) const {
    std::vector<Running> run(stats.size());
    for (std::uint32_t r : order_[f]) {
      const int k = node_of[r];
      if (k < 0 || !is_active[static_cast<std::size_t>(k)]) continue;
      const auto ku = static_cast<std::size_t>(k);
      Running& s = run[ku];
      const double v = xs_(r, f);
      const NodeStats& tot = stats[ku];
      if (s.count >= cfg.min_leaf && tot.count - s.count >= cfg.min_leaf && v > s.last) {
        const double gr = tot.g - s.g;
        const double hr = tot.h - s.h;
        const double gain = s.g * s.g / (s.h + kLeafDamping) + gr * gr / (hr + kLeafDamping) -
                            tot.g * tot.g / (tot.h + kLeafDamping);
        if (gain > best[ku].gain) {
          double thr = s.last + (v - s.last) / 2.0;
          if (!(thr > s.last)) thr = v;
          best[ku] = {gain, static_cast<int>(f), thr};
        }
      }
      s.g += g[r];
      s.h += h[r];
      ++s.count;
      s.last = v;
    }
  }

  const Dataset& xs_;
  std::vector<std::vector<std::uint32_t>> order_;
};

void logistic_grad(std::span<const double> score, std::span<const double> label,
                   std::span<const double> weight, std::vector<double>& g, std::vector<double>& h) {
  for (std::size_t r = 0; r < score.size(); ++r) {
    const double p = sigmoid(score[r]);
    g[r] = weight[r] * (p - label[r]);
    h[r] = weight[r] * p * (1.0 - p);
  }
}

double split_loss(std::span<const double> score, std::size_t n_p) {
  std::vector<double> sp(n_p);
  std::vector<double> sq(score.size() - n_p);
  for (std::size_t r = 0; r < n_p; ++r) sp[r] = sigmoid(score[r]);
  for (std::size_t r = n_p; r < score.size(); ++r) sq[r - n_p] = sigmoid(score[r]);
  return cross_entropy(sp, sq);
}

}  // namespace

RegressionTree fit_tree(std::span<const double> gradients, std::span<const double> hessians,
                        const Dataset& xs, const GbdtConfig& cfg) {
  if (gradients.size() != xs.rows() || hessians.size() != xs.rows()) {
    throw std::invalid_argument("fit_tree: gradient/hessian length must match rows");
  }
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    if (!std::isfinite(gradients[r]) || !std::isfinite(hessians[r])) {
      throw std::invalid_argument("fit_tree: non-finite gradient or hessian");
    }
  }
  return TreeBuilder(xs).build(gradients, hessians, cfg);
}

double Ensemble::raw_score(std::span<const double> x, std::optional<std::size_t> prefix) const {
  const std::size_t m = std::min(prefix.value_or(trees_.size()), trees_.size());
  double f = 0.0;
  for (std::size_t t = 0; t < m; ++t) f += trees_[t].predict(x);
  return f;
}

double Ensemble::predict(std::span<const double> x, std::optional<std::size_t> prefix) const {
  return sigmoid(raw_score(x, prefix));
}

std::optional<std::size_t> boosted_stop_index(std::span<const double> losses,
                                              const CapacityFunction& capacity) {
  for (std::size_t i = 1; i <= losses.size(); ++i) {
    if (losses[i - 1] <= capacity(i) * kLn2) return i;
  }
  return std::nullopt;
}

BoostResult boosted_ad(const SplitSample& split, const GbdtConfig& cfg) {
  cfg.validate();
  check_pair(split.p_train, split.q_train);
  check_pair(split.p_valid, split.q_valid);
  check_pair(split.p_train, split.p_valid);

  Dataset train = split.p_train;
  train.append(split.q_train);
  Dataset valid = split.p_valid;
  valid.append(split.q_valid);
  const std::size_t np = split.p_train.rows();
  const std::size_t nq = split.q_train.rows();
  const std::size_t n = np + nq;
  const std::size_t npv = split.p_valid.rows();

  // Class weights so that both halves count equally, normalized to mean 1.
  std::vector<double> label(n, 0.0);
  std::vector<double> weight(n);
  const double wp = static_cast<double>(n) / (2.0 * static_cast<double>(np));
  const double wq = static_cast<double>(n) / (2.0 * static_cast<double>(nq));
  for (std::size_t r = 0; r < n; ++r) {
    label[r] = r < np ? 1.0 : 0.0;
    weight[r] = r < np ? wp : wq;
  }

  std::vector<double> f_train(n, 0.0);
  std::vector<double> f_valid(valid.rows(), 0.0);
  std::vector<double> g(n);
  std::vector<double> h(n);
  const TreeBuilder builder(train);

  BoostResult out;
  out.trajectory.push_back({0, split_loss(f_train, np), split_loss(f_valid, npv), 0.0});
  std::size_t stop = cfg.n_trees;
  for (std::size_t i = 1; i <= cfg.n_trees; ++i) {
    logistic_grad(f_train, label, weight, g, h);
    RegressionTree tree = builder.build(g, h, cfg);
    tree.scale(cfg.shrinkage);
    for (std::size_t r = 0; r < n; ++r) f_train[r] += tree.predict(train.row(r));
    for (std::size_t r = 0; r < valid.rows(); ++r) f_valid[r] += tree.predict(valid.row(r));
    out.ensemble.push_back(std::move(tree));

    TrajectoryRow row{i, split_loss(f_train, np), split_loss(f_valid, npv), 0.0};
    if (cfg.capacity) row.threshold = (*cfg.capacity)(i) * kLn2;
    out.trajectory.push_back(row);
    if (cfg.capacity && row.valid_loss <= row.threshold) {
      out.stop_index = i;
      stop = i;
      break;
    }
  }

  const TrajectoryRow& last = out.trajectory.back();
  out.estimate.value = kLn2 - last.valid_loss;
  out.estimate.train_loss = last.train_loss;
  out.estimate.valid_loss = last.valid_loss;
  out.estimate.alpha_used = cfg.capacity ? (*cfg.capacity)(stop) : 1.0;
  out.estimate.samples_used = split.total_rows();
  return out;
}

double ensemble_prefix_divergence(const Ensemble& ens, std::size_t i, const Dataset& xp,
                                  const Dataset& xq) {
  if (i > ens.size()) throw std::out_of_range("ensemble prefix beyond ensemble size");
  check_pair(xp, xq);
  const Scorer f = [&](std::span<const double> x) { return ens.predict(x, i); };
  return kLn2 - cross_entropy(f, xp, xq);
}

Trainer jsd_trainer(GbdtConfig cfg) {
  cfg.capacity.reset();
  cfg.validate();
  return [cfg](const SplitSample& split, Rng&) { return boosted_ad(split, cfg).estimate; };
}

Trainer boosted_trainer(GbdtConfig cfg) {
  if (!cfg.capacity) throw std::invalid_argument("boosted_trainer: capacity function required");
  cfg.validate();
  return [cfg](const SplitSample& split, Rng&) { return boosted_ad(split, cfg).estimate; };
}

PseudoDivergenceFamily prefix_family(GbdtConfig cfg) {
  cfg.capacity.reset();
  cfg.validate();
  PseudoDivergenceFamily family;
  family.kind = FamilyKind::model_restricted;
  family.name = "gbdt-prefix";
  family.at = [cfg](double alpha) -> Trainer {
    return [cfg, alpha](const SplitSample& split, Rng&) {
      const auto trees = static_cast<std::size_t>(std::lround(alpha * static_cast<double>(cfg.n_trees)));
      DivergenceEstimate est;
      est.alpha_used = alpha;
      if (trees == 0) {
        est.value = 0.0;
        est.train_loss = kLn2;
        est.valid_loss = kLn2;
      } else {
        GbdtConfig c = cfg;
        c.n_trees = trees;
        est = boosted_ad(split, c).estimate;
        est.alpha_used = alpha;
      }
      est.samples_used = split.total_rows();
      return est;
    };
  };
  return family;
}

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows) {
  CsvWriter csv(os);
  csv.header({"i", "train_loss", "valid_loss", "threshold"});
  for (const TrajectoryRow& r : rows) csv.row(r.i, r.train_loss, r.valid_loss, r.threshold);
}

}  // namespace adiv::gbdt
