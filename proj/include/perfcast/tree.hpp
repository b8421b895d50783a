#pragma once

#include "perfcast/random.hpp"

#include <Eigen/Dense>

#include <vector>

namespace perfcast {

/// Internal nodes send x[feature] < threshold to `left`; leaves have
/// feature == -1 and carry `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes; // nodes[0] is the root

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int depth() const;
  int leaf_count() const;
  /// Throws InputError unless every path from the root ends in a leaf and all
  /// numbers are finite. `features` bounds the split indices.
  void validate(int features) const;

  static RegressionTree leaf(double value) { return {{TreeNode{-1, 0.0, -1, -1, value}}}; }
};

struct CartOptions {
  int max_depth = 3;
  double min_leaf = 2; // minimum total sample weight per child
  int max_features = 0; // candidate features per split; 0 means all
};

/// Squared-error CART with exact greedy splits at midpoints between sorted
/// distinct values. Rows with zero weight are ignored; integer weights act as
/// bootstrap multiplicities. `rng` is only used when max_features is set.
RegressionTree fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weight,
                        const CartOptions& options, rnd::Engine* rng = nullptr);

} // namespace perfcast
