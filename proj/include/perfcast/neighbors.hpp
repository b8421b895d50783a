#pragma once

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace perfcast {

/// Exact Euclidean k-nearest-neighbour search over a fixed point set.
///
/// Neighbours are ordered by (squared distance, key) so equal-distance ties
/// always resolve to the smaller key; results are identical to a brute-force
/// scan. Keys default to row indices of the source matrix.
class NeighborIndex {
public:
  using Index = Eigen::Index;

  struct Neighbor {
    double dist2 = std::numeric_limits<double>::infinity();
    Index key = -1;

    friend bool operator<(const Neighbor& a, const Neighbor& b)
    {
      return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.key < b.key);
    }
  };

  /// Indexes the rows `members` of `points`; key of row r is `keys[r]`
  /// (or r when keys is empty).
  NeighborIndex(const Eigen::MatrixXd& points, std::span<const Index> members, std::span<const Index> keys = {});
  explicit NeighborIndex(const Eigen::MatrixXd& points);

  Index size() const { return static_cast<Index>(keys_.size()); }

  /// The k nearest points to `query`, skipping the point whose key equals
  /// `exclude_key`.
  std::vector<Neighbor> nearest(std::span<const double> query, int k, Index exclude_key = -1) const;

  /// Merges this index's candidates into an existing sorted best-list of
  /// capacity k. Lets several indexes share one running bound.
  void nearest_into(std::span<const double> query, int k, Index exclude_key, std::vector<Neighbor>& best) const;

private:
  struct Node {
    int dim = -1; // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
    Index begin = 0, end = 0;
  };

  int build(Index begin, Index end, std::vector<Index>& order, const Eigen::MatrixXd& points,
            std::span<const Index> rows);
  void search(int node, const double* q, int k, Index exclude_key, std::vector<Neighbor>& best) const;

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts_;
  std::vector<Index> keys_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Squared Euclidean distance accumulated in coordinate order.
inline double squared_distance(const double* a, const double* b, Eigen::Index d)
{
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

} // namespace perfcast
