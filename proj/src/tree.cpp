#include "perfcast/tree.hpp"

#include "perfcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace perfcast {

double RegressionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  int i = 0;
  while (!nodes[std::size_t(i)].is_leaf()) {
    const auto& n = nodes[std::size_t(i)];
    i = x(n.feature) < n.threshold ? n.left : n.right;
  }
  return nodes[std::size_t(i)].value;
}

int RegressionTree::depth() const
{
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& n = nodes[std::size_t(i)];
    return n.is_leaf() ? 0 : 1 + std::max(walk(n.left), walk(n.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

int RegressionTree::leaf_count() const
{
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

void RegressionTree::validate(int features) const
{
  if (nodes.empty()) throw InputError("tree has no nodes");
  std::vector<int> seen(nodes.size(), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (i < 0 || std::size_t(i) >= nodes.size()) throw InputError("tree child index out of range");
    if (seen[std::size_t(i)]++) throw InputError("tree node reached twice");
    const auto& n = nodes[std::size_t(i)];
    if (n.is_leaf()) {
      if (!std::isfinite(n.value)) throw InputError("tree leaf value is not finite");
      continue;
    }
    if (n.feature >= features) throw InputError("tree split feature out of range");
    if (!std::isfinite(n.threshold)) throw InputError("tree threshold is not finite");
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class CartBuilder {
public:
  CartBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, const CartOptions& opt,
              rnd::Engine* rng)
      : x_(x), y_(y), w_(w), opt_(opt), rng_(rng)
  {
    std::vector<int> rows;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      if (w(r) > 0.0) rows.push_back(int(r));
    n_ = rows.size();
    const auto d = std::size_t(x.cols());
    sorted_.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      sorted_[j] = rows;
      std::stable_sort(sorted_[j].begin(), sorted_[j].end(),
                       [&](int a, int b) { return x_(a, Eigen::Index(j)) < x_(b, Eigen::Index(j)); });
    }
    goes_left_.assign(std::size_t(x.rows()), 0);
    buffer_.resize(n_);
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionTree build()
  {
    RegressionTree tree;
    if (n_ == 0) throw InputError("tree: no rows with positive weight");
    grow(tree, 0, n_, 0);
    return tree;
  }

private:
  // Rows of the node occupy [begin, end) in every sorted_ column.
  int grow(RegressionTree& tree, std::size_t begin, std::size_t end, int depth)
  {
    double wsum = 0.0, ysum = 0.0, yy = 0.0;
    bool pure = true;
    for (std::size_t k = begin; k < end; ++k) {
      const int r = sorted_[0][k];
      wsum += w_(r);
      ysum += w_(r) * y_(r);
      pure = pure && y_(r) == y_(sorted_[0][begin]);
    }
    const double mean = pure ? y_(sorted_[0][begin]) : ysum / wsum;
    for (std::size_t k = begin; k < end; ++k) {
      const int r = sorted_[0][k];
      yy += w_(r) * (y_(r) - mean) * (y_(r) - mean);
    }

    const int id = int(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean});
    if (depth >= opt_.max_depth || wsum < 2.0 * opt_.min_leaf || pure || yy <= 0.0) return id;

    const Split split = best_split(begin, end, wsum, ysum, yy);
    if (split.feature < 0) return id;

    const auto& order = sorted_[std::size_t(split.feature)];
    std::size_t n_left = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const int r = order[k];
      goes_left_[std::size_t(r)] = x_(r, split.feature) < split.threshold;
      n_left += goes_left_[std::size_t(r)];
    }
    for (auto& col : sorted_) {
      auto out_left = buffer_.begin();
      auto out_right = buffer_.begin() + std::ptrdiff_t(n_left);
      for (std::size_t k = begin; k < end; ++k)
        *(goes_left_[std::size_t(col[k])] ? out_left++ : out_right++) = col[k];
      std::copy(buffer_.begin(), buffer_.begin() + std::ptrdiff_t(end - begin), col.begin() + std::ptrdiff_t(begin));
    }

    const int left = grow(tree, begin, begin + n_left, depth + 1);
    const int right = grow(tree, begin + n_left, end, depth + 1);
    auto& node = tree.nodes[std::size_t(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    node.value = 0.0;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, double wsum, double ysum, double node_sse)
  {
    std::size_t candidates = features_.size();
    if (opt_.max_features > 0 && std::size_t(opt_.max_features) < features_.size()) {
      if (!rng_) throw InputError("tree: feature subsampling needs a random engine");
      // partial Fisher-Yates over the feature pool
      std::iota(features_.begin(), features_.end(), 0);
      candidates = std::size_t(opt_.max_features);
      for (std::size_t i = 0; i < candidates; ++i) {
        const auto j = i + rnd::uniform_index(*rng_, features_.size() - i);
        std::swap(features_[i], features_[j]);
      }
      std::sort(features_.begin(), features_.begin() + std::ptrdiff_t(candidates));
    }

    Split best;
    const double parent = ysum * ysum / wsum;
    // gains below this are rounding noise, including the cancellation in sl^2/wl + sr^2/wr - parent
    const double min_gain = 1e-12 * node_sse + 64.0 * std::numeric_limits<double>::epsilon() * parent;
    for (std::size_t c = 0; c < candidates; ++c) {
      const int j = features_[c];
      const auto& order = sorted_[std::size_t(j)];
      double wl = 0.0, sl = 0.0;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        const int r = order[k];
        wl += w_(r);
        sl += w_(r) * y_(r);
        const double a = x_(r, j), b = x_(order[k + 1], j);
        if (!(a < b)) continue;
        const double wr = wsum - wl;
        if (wl < opt_.min_leaf || wr < opt_.min_leaf) continue;
        const double sr = ysum - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > min_gain && gain > best.gain) {
          double t = a + (b - a) * 0.5;
          if (!(a < t)) t = b;
          best = Split{j, t, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& w_;
  const CartOptions& opt_;
  rnd::Engine* rng_;
  std::size_t n_ = 0;
  std::vector<std::vector<int>> sorted_;
  std::vector<char> goes_left_;
  std::vector<int> buffer_;
  std::vector<int> features_;
};

} // namespace

RegressionTree fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weight,
                        const CartOptions& options, rnd::Engine* rng)
{
  if (x.rows() != y.size() || y.size() != weight.size()) throw InputError("tree: row counts differ");
  if (x.cols() < 1) throw InputError("tree: no features");
  if (options.max_depth < 0 || options.min_leaf <= 0.0) throw InputError("tree: invalid depth or leaf size");
  if (!x.allFinite() || !y.allFinite() || !weight.allFinite()) throw InputError("tree: non-finite input");
  return CartBuilder(x, y, weight, options, rng).build();
}

} // namespace perfcast
