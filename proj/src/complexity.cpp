#include "perfcast/complexity.hpp"

#include "perfcast/error.hpp"
#include "perfcast/neighbors.hpp"
#include "perfcast/random.hpp"
#include "perfcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace perfcast {

std::size_t measure_index(std::string_view name)
{
  for (std::size_t i = 0; i < kMeasureNames.size(); ++i)
    if (kMeasureNames[i] == name) return i;
  throw InputError("unknown measure '" + std::string(name) + "'");
}

MeasureVector ComplexityVector::values() const
{
  MeasureVector v;
  v << covariance_mean, variance_mean, max_fisher_ratio, overlap_region, max_feature_efficiency, linear_error,
      nn_distance_ratio, knn3_error, nn_nonlinearity, double(raw_feature_count), double(pca95_components),
      pca_retention_ratio, class_entropy, imbalance_ratio;
  return v;
}

ComplexityVector ComplexityVector::from_values(const MeasureVector& v, Provenance provenance)
{
  ComplexityVector c;
  c.covariance_mean = v(0);
  c.variance_mean = v(1);
  c.max_fisher_ratio = v(2);
  c.overlap_region = v(3);
  c.max_feature_efficiency = v(4);
  c.linear_error = v(5);
  c.nn_distance_ratio = v(6);
  c.knn3_error = v(7);
  c.nn_nonlinearity = v(8);
  c.raw_feature_count = static_cast<int>(std::lround(v(9)));
  c.pca95_components = static_cast<int>(std::lround(v(10)));
  c.pca_retention_ratio = v(11);
  c.class_entropy = v(12);
  c.imbalance_ratio = v(13);
  c.provenance = std::move(provenance);
  return c;
}

namespace complexity {

namespace {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::vector<Index>> members_by_class(const DatasetTable& t)
{
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(t.num_classes));
  for (Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(t.labels[i])].push_back(i);
  return out;
}

void require_classes(const DatasetTable& t, int min_per_class, const char* who)
{
  if (t.num_classes < 2) throw InputError(std::string(who) + ": need at least 2 classes");
  for (auto c : t.class_counts())
    if (c < min_per_class)
      throw InputError(std::string(who) + ": every class needs at least " + std::to_string(min_per_class) + " rows");
}

/// Per-class columns sorted ascending (n_c x d), for range and count queries.
std::vector<Eigen::MatrixXd> sorted_class_columns(const DatasetTable& t)
{
  const auto members = members_by_class(t);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(members.size());
  for (const auto& m : members) {
    Eigen::MatrixXd block = t.features(m, Eigen::all);
    for (Index j = 0; j < block.cols(); ++j) std::sort(block.col(j).begin(), block.col(j).end());
    out.push_back(std::move(block));
  }
  return out;
}

template <class F>
double mean_over_class_pairs(int C, F&& per_pair)
{
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < C; ++a)
    for (int b = a + 1; b < C; ++b) {
      total += per_pair(a, b);
      ++pairs;
    }
  return total / pairs;
}

} // namespace

double covariance_mean(const DatasetTable& t)
{
  if (t.rows() < 2) throw InputError("covariance_mean: need at least 2 rows");
  const Index d = t.cols();
  if (d < 2) return 0.0;
  const Eigen::MatrixXd cov = stats::covariance(t.features);
  double sum = 0.0;
  for (Index j = 1; j < d; ++j)
    for (Index i = 0; i < j; ++i) sum += std::abs(cov(i, j));
  return sum / (0.5 * double(d) * double(d - 1));
}

double variance_mean(const DatasetTable& t)
{
  if (t.rows() < 2) throw InputError("variance_mean: need at least 2 rows");
  return stats::column_variances(t.features).mean();
}

double max_fisher_ratio(const DatasetTable& t)
{
  require_classes(t, 1, "max_fisher_ratio");
  const auto members = members_by_class(t);
  double best = 0.0;
  for (Index j = 0; j < t.cols(); ++j) {
    const auto col = t.features.col(j);
    const double mu = col.mean();
    double between = 0.0, within = 0.0;
    for (const auto& m : members) {
      double mc = 0.0;
      for (Index i : m) mc += col(i);
      mc /= double(m.size());
      between += double(m.size()) * (mc - mu) * (mc - mu);
      for (Index i : m) within += (col(i) - mc) * (col(i) - mc);
    }
    best = std::max(best, between / (within + 1e-12));
  }
  return std::min(best, kFisherCap);
}

double overlap_region(const DatasetTable& t)
{
  require_classes(t, 1, "overlap_region");
  const auto cols = sorted_class_columns(t);
  const Index d = t.cols();
  return mean_over_class_pairs(t.num_classes, [&](int a, int b) {
    const auto& A = cols[a];
    const auto& B = cols[b];
    double sum = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double min_a = A(0, j), max_a = A(A.rows() - 1, j);
      const double min_b = B(0, j), max_b = B(B.rows() - 1, j);
      const double overlap = std::max(0.0, std::min(max_a, max_b) - std::max(min_a, min_b));
      const double span = std::max(max_a, max_b) - std::min(min_a, min_b);
      sum += overlap / std::max(span, 1e-12);
    }
    return sum / double(d);
  });
}

double max_feature_efficiency(const DatasetTable& t)
{
  require_classes(t, 1, "max_feature_efficiency");
  const auto cols = sorted_class_columns(t);
  const Index d = t.cols();
  // points strictly outside the closed interval [lo, hi]
  auto outside = [](const auto& sorted_col, double lo, double hi) {
    const auto below = std::lower_bound(sorted_col.begin(), sorted_col.end(), lo) - sorted_col.begin();
    const auto above = sorted_col.end() - std::upper_bound(sorted_col.begin(), sorted_col.end(), hi);
    return double(below + above);
  };
  return mean_over_class_pairs(t.num_classes, [&](int a, int b) {
    const auto& A = cols[a];
    const auto& B = cols[b];
    const double total = double(A.rows() + B.rows());
    double best = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double lo = std::max(A(0, j), B(0, j));
      const double hi = std::min(A(A.rows() - 1, j), B(B.rows() - 1, j));
      const double eff = (outside(A.col(j), lo, hi) + outside(B.col(j), lo, hi)) / total;
      best = std::max(best, eff);
    }
    return best;
  });
}

double softmax_training_error(const DatasetTable& t, const LinearClassifierOptions& opt)
{
  require_classes(t, 1, "linear_error");
  const Index n = t.rows(), d = t.cols(), C = t.num_classes;
  const Eigen::MatrixXd& X = t.features;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, C);
  for (Index i = 0; i < n; ++i) Y(i, t.labels[i]) = 1.0;

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, C);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(C);
  Eigen::MatrixXd P(n, C);
  auto logits = [&] {
    P.noalias() = X * W;
    P.rowwise() += b;
  };
  for (int it = 0; it < opt.iterations; ++it) {
    logits();
    for (Index i = 0; i < n; ++i) {
      P.row(i).array() -= P.row(i).maxCoeff();
      P.row(i) = P.row(i).array().exp().matrix();
      P.row(i) /= P.row(i).sum();
    }
    P -= Y;
    const Eigen::MatrixXd grad_w = X.transpose() * P / double(n) + opt.l2 * W;
    const Eigen::RowVectorXd grad_b = P.colwise().sum() / double(n);
    W -= opt.step * grad_w;
    b -= opt.step * grad_b;
  }
  logits();
  Index wrong = 0;
  for (Index i = 0; i < n; ++i) {
    Index pred = 0;
    P.row(i).maxCoeff(&pred); // first maximum: ties go to the smaller class id
    if (pred != t.labels[i]) ++wrong;
  }
  return double(wrong) / double(n);
}

double axis_partition_error(const DatasetTable& t)
{
  require_classes(t, 1, "linear_error");
  const Index n = t.rows();
  const int C = t.num_classes;
  long best_correct = 0;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<std::vector<long>> blocks;
  for (Index j = 0; j < t.cols(); ++j) {
    const auto col = t.features.col(j);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return col(a) < col(b); });
    // class counts for each run of equal values
    blocks.clear();
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k == 0 || col(order[k]) != col(order[k - 1])) blocks.emplace_back(static_cast<std::size_t>(C), 0L);
      ++blocks.back()[static_cast<std::size_t>(t.labels[order[k]])];
    }

    if (C <= 4) {
      // dp[mask][c]: most points correct so far with the open interval owned
      // by class c, having used the classes in mask.
      const int masks = 1 << C;
      std::vector<long> dp(static_cast<std::size_t>(masks * C), -1), next(dp.size());
      auto at = [C](int mask, int c) { return static_cast<std::size_t>(mask * C + c); };
      for (int c = 0; c < C; ++c) dp[at(1 << c, c)] = blocks[0][c];
      for (std::size_t k = 1; k < blocks.size(); ++k) {
        std::fill(next.begin(), next.end(), -1L);
        for (int mask = 1; mask < masks; ++mask)
          for (int c = 0; c < C; ++c) {
            const long v = dp[at(mask, c)];
            if (v < 0) continue;
            next[at(mask, c)] = std::max(next[at(mask, c)], v + blocks[k][c]);
            for (int c2 = 0; c2 < C; ++c2) {
              if (mask & (1 << c2)) continue;
              const int m2 = mask | (1 << c2);
              next[at(m2, c2)] = std::max(next[at(m2, c2)], v + blocks[k][c2]);
            }
          }
        dp.swap(next);
      }
      best_correct = std::max(best_correct, *std::max_element(dp.begin(), dp.end()));
    } else {
      std::vector<long> total(static_cast<std::size_t>(C), 0), prefix(static_cast<std::size_t>(C), 0);
      for (const auto& blk : blocks)
        for (int c = 0; c < C; ++c) total[c] += blk[c];
      best_correct = std::max(best_correct, *std::max_element(total.begin(), total.end()));
      auto top2 = [C](auto&& value) {
        int i1 = -1, i2 = -1;
        for (int c = 0; c < C; ++c) {
          if (i1 < 0 || value(c) > value(i1)) {
            i2 = i1;
            i1 = c;
          } else if (i2 < 0 || value(c) > value(i2)) {
            i2 = c;
          }
        }
        return std::pair{i1, i2};
      };
      for (std::size_t k = 0; k + 1 < blocks.size(); ++k) {
        for (int c = 0; c < C; ++c) prefix[c] += blocks[k][c];
        auto [p1, p2] = top2([&](int c) { return prefix[c]; });
        auto [s1, s2] = top2([&](int c) { return total[c] - prefix[c]; });
        long v = (p1 != s1) ? prefix[p1] + total[s1] - prefix[s1]
                            : std::max(prefix[p1] + total[s2] - prefix[s2], prefix[p2] + total[s1] - prefix[s1]);
        best_correct = std::max(best_correct, v);
      }
    }
  }
  return double(n - best_correct) / double(n);
}

double linear_error(const DatasetTable& t, const LinearClassifierOptions& opt)
{
  if (t.rows() < t.num_classes) throw InputError("linear_error: need at least as many rows as classes");
  const double softmax = softmax_training_error(t, opt);
  if (!opt.axis_partition_refinement) return softmax;
  return std::min(softmax, axis_partition_error(t));
}

double nn_distance_ratio(const DatasetTable& t)
{
  require_classes(t, 2, "nn_distance_ratio");
  const RowMatrix pts = t.features;
  const auto members = members_by_class(t);
  std::vector<NeighborIndex> per_class;
  per_class.reserve(members.size());
  for (const auto& m : members) per_class.emplace_back(t.features, m);

  const Index d = t.cols();
  double intra = 0.0, inter = 0.0;
  std::vector<NeighborIndex::Neighbor> best;
  for (Index i = 0; i < t.rows(); ++i) {
    const std::span<const double> q(pts.row(i).data(), static_cast<std::size_t>(d));
    const int c = t.labels[i];
    intra += std::sqrt(per_class[c].nearest(q, 1, i).front().dist2);
    best.clear();
    for (int other = 0; other < t.num_classes; ++other)
      if (other != c) per_class[other].nearest_into(q, 1, -1, best);
    inter += std::sqrt(best.front().dist2);
  }
  const double n = double(t.rows());
  return (intra / n) / std::max(inter / n, 1e-12);
}

double knn3_error(const DatasetTable& t)
{
  if (t.rows() < 4) throw InputError("knn3_error: need at least 4 rows");
  const RowMatrix pts = t.features;
  const NeighborIndex index(t.features);
  std::vector<int> votes(static_cast<std::size_t>(t.num_classes));
  Index wrong = 0;
  for (Index i = 0; i < t.rows(); ++i) {
    const std::span<const double> q(pts.row(i).data(), static_cast<std::size_t>(t.cols()));
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& nb : index.nearest(q, 3, i)) ++votes[static_cast<std::size_t>(t.labels[nb.key])];
    // max_element returns the first maximum, i.e. the smaller class id on ties
    const auto pred = std::max_element(votes.begin(), votes.end()) - votes.begin();
    if (pred != t.labels[i]) ++wrong;
  }
  return double(wrong) / double(t.rows());
}

double nn_nonlinearity(const DatasetTable& t, std::uint64_t seed)
{
  require_classes(t, 2, "nn_nonlinearity");
  const Index n = t.rows(), d = t.cols();
  const RowMatrix pts = t.features;

  // Canonical row order (features lexicographic, then label) makes the
  // sampling sequence independent of the input row order.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j)
      if (pts(a, j) != pts(b, j)) return pts(a, j) < pts(b, j);
    return t.labels[a] < t.labels[b];
  });
  std::vector<Index> rank(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(t.num_classes));
  std::vector<Index> position(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const Index row = order[r];
    auto& m = members[static_cast<std::size_t>(t.labels[row])];
    position[row] = static_cast<Index>(m.size());
    m.push_back(row);
  }

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const NeighborIndex index(t.features, all, rank);

  rnd::Engine rng(seed);
  Eigen::RowVectorXd point(d);
  Index wrong = 0;
  for (Index r = 0; r < n; ++r) {
    const Index p = order[r];
    const auto& m = members[static_cast<std::size_t>(t.labels[p])];
    auto j = static_cast<Index>(rnd::uniform_index(rng, m.size() - 1));
    if (j >= position[p]) ++j;
    const Index q = m[static_cast<std::size_t>(j)];
    const double alpha = rnd::uniform01(rng);
    point = alpha * pts.row(p) + (1.0 - alpha) * pts.row(q);
    const auto nb = index.nearest(std::span<const double>(point.data(), static_cast<std::size_t>(d)), 1).front();
    if (t.labels[order[nb.key]] != t.labels[p]) ++wrong;
  }
  return double(wrong) / double(n);
}

Dimensionality dimensionality_measures(const DatasetTable& t)
{
  if (t.rows() < 2) throw InputError("dimensionality: need at least 2 rows");
  Dimensionality out;
  out.raw_feature_count = static_cast<int>(t.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stats::covariance(t.features), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("dimensionality: eigendecomposition failed");
  Eigen::VectorXd ev = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = ev.sum();
  int k = 1;
  if (total > 0.0) {
    double cum = 0.0;
    for (k = 0; k < ev.size();) {
      cum += ev(k++);
      if (cum >= 0.95 * total * (1.0 - 1e-12)) break;
    }
  }
  out.pca95_components = k;
  out.pca_retention_ratio = double(k) / double(t.cols());
  return out;
}

ClassBalance class_balance_measures(const DatasetTable& t)
{
  require_classes(t, 1, "class_balance");
  const auto counts = t.class_counts();
  const double n = double(t.rows());
  double h = 0.0;
  for (auto c : counts) {
    const double p = double(c) / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  return {h / std::log(double(t.num_classes)), double(*lo) / double(*hi)};
}

ComplexityVector compute_all(const DatasetTable& raw, std::uint64_t seed, double fraction)
{
  validate(raw);
  require_classes(raw, 2, raw.dataset_id.empty() ? "compute_all" : raw.dataset_id.c_str());

  ComplexityVector v;
  v.provenance = Provenance{raw.dataset_id, fraction, seed, {}};
  auto tagged = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const InputError& e) {
      throw InputError(std::string(name) + " (" + raw.dataset_id + "): " + e.what());
    } catch (const NumericError& e) {
      throw NumericError(std::string(name) + " (" + raw.dataset_id + "): " + e.what());
    }
  };

  v.covariance_mean = tagged("covariance_mean", [&] { return covariance_mean(raw); });
  if (raw.cols() < 2) v.provenance.notes.emplace_back("covariance_mean: single feature, no pairs; set to 0");
  v.variance_mean = tagged("variance_mean", [&] { return variance_mean(raw); });

  const DatasetTable z = apply_standardization(raw, fit_standardization(raw));
  v.max_fisher_ratio = tagged("max_fisher_ratio", [&] { return max_fisher_ratio(z); });
  v.overlap_region = tagged("overlap_region", [&] { return overlap_region(z); });
  v.max_feature_efficiency = tagged("max_feature_efficiency", [&] { return max_feature_efficiency(z); });
  v.linear_error = tagged("linear_error", [&] { return linear_error(z); });
  v.nn_distance_ratio = tagged("nn_distance_ratio", [&] { return nn_distance_ratio(z); });
  v.knn3_error = tagged("knn3_error", [&] { return knn3_error(z); });
  v.nn_nonlinearity = tagged("nn_nonlinearity", [&] { return nn_nonlinearity(z, seed); });
  const auto dim = tagged("dimensionality", [&] { return dimensionality_measures(z); });
  v.raw_feature_count = dim.raw_feature_count;
  v.pca95_components = dim.pca95_components;
  v.pca_retention_ratio = dim.pca_retention_ratio;
  const auto bal = tagged("class_balance", [&] { return class_balance_measures(z); });
  v.class_entropy = bal.class_entropy;
  v.imbalance_ratio = bal.imbalance_ratio;

  if (!v.values().allFinite()) throw NumericError(raw.dataset_id + ": non-finite complexity measure");
  return v;
}

} // namespace complexity
} // namespace perfcast
