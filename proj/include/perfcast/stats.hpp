#pragma once

// Small dense statistics kernels shared across modules. Everything here is a
// free function over Eigen expressions, templated on the scalar type; the
// n-1 (unbiased) denominator is used throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace perfcast::stats {

template <class Derived>
auto column_means(const Eigen::MatrixBase<Derived>& x)
{
  using Scalar = typename Derived::Scalar;
  return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(x.colwise().mean().transpose());
}

template <class Derived>
auto column_variances(const Eigen::MatrixBase<Derived>& x)
{
  using Scalar = typename Derived::Scalar;
  const auto n = x.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Scalar mean = x.col(j).mean();
    out(j) = (x.col(j).array() - mean).square().sum() / static_cast<Scalar>(n - 1);
  }
  return out;
}

/// Sample covariance matrix of the columns of x (d x d).
template <class Derived>
auto covariance(const Eigen::MatrixBase<Derived>& x)
{
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat centered = x.rowwise() - x.colwise().mean();
  Mat cov = Mat::Zero(x.cols(), x.cols());
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov.template triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return Mat(cov / static_cast<Scalar>(x.rows() - 1));
}

template <class DerivedA, class DerivedB>
typename DerivedA::Scalar pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
  using Scalar = typename DerivedA::Scalar;
  const auto ac = (a.array() - a.mean()).eval();
  const auto bc = (b.array() - b.mean()).eval();
  const Scalar denom = std::sqrt(ac.square().sum() * bc.square().sum());
  if (denom <= Scalar(0)) return Scalar(0);
  return (ac * bc).sum() / denom;
}

/// Ranks with ties replaced by their average rank (1-based).
template <class Scalar>
std::vector<Scalar> average_ranks(const std::vector<Scalar>& v)
{
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<Scalar> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const Scalar r = Scalar(i + j + 2) / Scalar(2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

template <class Scalar>
Scalar spearman(const std::vector<Scalar>& a, const std::vector<Scalar>& b)
{
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  return pearson(Eigen::Map<const Vec>(ra.data(), Eigen::Index(ra.size())),
                 Eigen::Map<const Vec>(rb.data(), Eigen::Index(rb.size())));
}

/// Linear-interpolation quantile over sorted positions (R type 7).
template <class Scalar>
Scalar quantile(std::vector<Scalar> v, Scalar p)
{
  std::sort(v.begin(), v.end());
  const Scalar h = (Scalar(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - Scalar(lo)) * (v[hi] - v[lo]);
}

template <class Scalar>
Scalar median(std::vector<Scalar> v)
{
  return quantile(std::move(v), Scalar(0.5));
}

/// Upper tail P(F > f) of the F(df1, df2) distribution.
double f_survival(double f, double df1, double df2);

} // namespace perfcast::stats
