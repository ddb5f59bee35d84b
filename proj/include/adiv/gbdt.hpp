#pragma once
// Gradient-boosted depth-limited regression trees on the logistic loss.
//
// The score F is a log-odds sum of trees starting from F_0 = 0, so the
// empty ensemble predicts 1/2 everywhere. Each prefix of an ensemble is itself
// an ensemble, which gives the boosting-based pseudo-divergence family
//   D_{c(i)}(P, Q) = ln 2 - L(F_i, P, Q).

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "adiv/capacity.hpp"
#include "adiv/core.hpp"
#include "adiv/divergence.hpp"

namespace adiv::gbdt {

inline constexpr double kLeafDamping = 1e-6;

struct GbdtConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;
  double shrinkage = 0.1;
  std::size_t min_leaf = 8;
  // Early-stopping schedule. Absent for plain (JSD) training.
  std::optional<CapacityFunction> capacity;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;
  void scale(double factor);

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

// Exact greedy second-order tree: axis-aligned splits maximizing
//   G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l),  l = kLeafDamping,
// with at least min_leaf rows per child; leaves hold -G/(H + l). Rows with
// x[f] < threshold go left.
RegressionTree fit_tree(std::span<const double> gradients, std::span<const double> hessians,
                        const Dataset& xs, const GbdtConfig& cfg);

class Ensemble {
 public:
  // Log-odds of the first `prefix` trees (all trees by default).
  double raw_score(std::span<const double> x, std::optional<std::size_t> prefix = {}) const;
  double predict(std::span<const double> x, std::optional<std::size_t> prefix = {}) const;

  std::size_t size() const { return trees_.size(); }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  void push_back(RegressionTree tree) { trees_.push_back(std::move(tree)); }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;

 private:
  std::vector<RegressionTree> trees_;
};

struct TrajectoryRow {
  std::size_t i = 0;
  double train_loss = kLn2;
  double valid_loss = kLn2;
  double threshold = 0.0;  // c(i) ln 2, zero without a capacity schedule
};

struct BoostResult {
  Ensemble ensemble;
  std::vector<TrajectoryRow> trajectory;  // rows for i = 0..size()
  std::optional<std::size_t> stop_index;
  DivergenceEstimate estimate;
};

// First i in 1..N with losses[i-1] <= c(i) ln 2, where losses[i-1] is the
// validation loss after i trees. Empty when the schedule never triggers.
std::optional<std::size_t> boosted_stop_index(std::span<const double> losses,
                                              const CapacityFunction& capacity);

// Boosts on the training halves of `split` and tracks validation loss. With a
// capacity schedule, stops at boosted_stop_index and reports ln 2 - L_i with
// alpha_used = c(i); otherwise grows all n_trees and reports alpha_used = 1.
BoostResult boosted_ad(const SplitSample& split, const GbdtConfig& cfg);

// ln 2 - L(F_i) on (xp, xq). i = 0 gives exactly 0.
double ensemble_prefix_divergence(const Ensemble& ens, std::size_t i, const Dataset& xp,
                                  const Dataset& xq);

Trainer jsd_trainer(GbdtConfig cfg);
Trainer boosted_trainer(GbdtConfig cfg);
// Model-restricted family: D_alpha uses round(alpha * n_trees) trees.
PseudoDivergenceFamily prefix_family(GbdtConfig cfg);

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows);

}  // namespace adiv::gbdt
