#include "perfcast/neighbors.hpp"

#include <algorithm>
#include <numeric>

namespace perfcast {

namespace {

constexpr NeighborIndex::Index kLeafSize = 16;

void offer(std::vector<NeighborIndex::Neighbor>& best, int k, const NeighborIndex::Neighbor& cand)
{
  if (static_cast<int>(best.size()) == k && !(cand < best.back())) return;
  auto pos = std::upper_bound(best.begin(), best.end(), cand);
  best.insert(pos, cand);
  if (static_cast<int>(best.size()) > k) best.pop_back();
}

} // namespace

NeighborIndex::NeighborIndex(const Eigen::MatrixXd& points)
{
  std::vector<Index> rows(static_cast<std::size_t>(points.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  *this = NeighborIndex(points, rows);
}

NeighborIndex::NeighborIndex(const Eigen::MatrixXd& points, std::span<const Index> members, std::span<const Index> keys)
{
  const auto m = static_cast<Index>(members.size());
  std::vector<Index> order(members.size());
  std::iota(order.begin(), order.end(), Index{0});
  if (m > 0) root_ = build(0, m, order, points, members);

  pts_.resize(m, points.cols());
  keys_.resize(members.size());
  for (Index i = 0; i < m; ++i) {
    const Index row = members[static_cast<std::size_t>(order[i])];
    pts_.row(i) = points.row(row);
    keys_[static_cast<std::size_t>(i)] = keys.empty() ? row : keys[static_cast<std::size_t>(row)];
  }
}

int NeighborIndex::build(Index begin, Index end, std::vector<Index>& order, const Eigen::MatrixXd& points,
                         std::span<const Index> rows)
{
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, begin, end});
  if (end - begin <= kLeafSize) return id;

  int best_dim = -1;
  double best_spread = 0.0;
  for (Index j = 0; j < points.cols(); ++j) {
    double lo = points(rows[order[begin]], j), hi = lo;
    for (Index i = begin + 1; i < end; ++i) {
      const double v = points(rows[order[i]], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(j);
    }
  }
  if (best_dim < 0) return id; // all points identical

  const Index mid = begin + (end - begin) / 2;
  auto coord = [&](Index local) { return points(rows[local], best_dim); };
  std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                   [&](Index a, Index b) { return coord(a) < coord(b); });
  const double split = coord(order[mid]);

  const int left = build(begin, mid, order, points, rows);
  const int right = build(mid, end, order, points, rows);
  nodes_[id].dim = best_dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NeighborIndex::search(int node_id, const double* q, int k, Index exclude_key, std::vector<Neighbor>& best) const
{
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.dim < 0) {
    const Index d = pts_.cols();
    for (Index i = node.begin; i < node.end; ++i) {
      const Index key = keys_[static_cast<std::size_t>(i)];
      if (key == exclude_key) continue;
      offer(best, k, Neighbor{squared_distance(q, pts_.row(i).data(), d), key});
    }
    return;
  }
  // left holds coordinates <= split, right holds coordinates >= split
  const double diff = q[node.dim] - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, q, k, exclude_key, best);
  const bool full = static_cast<int>(best.size()) == k;
  if (!full || diff * diff <= best.back().dist2) search(far, q, k, exclude_key, best);
}

void NeighborIndex::nearest_into(std::span<const double> query, int k, Index exclude_key,
                                 std::vector<Neighbor>& best) const
{
  if (root_ < 0 || k <= 0) return;
  search(root_, query.data(), k, exclude_key, best);
}

std::vector<NeighborIndex::Neighbor> NeighborIndex::nearest(std::span<const double> query, int k,
                                                            Index exclude_key) const
{
  std::vector<Neighbor> best;
  best.reserve(static_cast<std::size_t>(k) + 1);
  nearest_into(query, k, exclude_key, best);
  return best;
}

} // namespace perfcast
