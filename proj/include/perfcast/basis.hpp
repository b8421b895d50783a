#pragma once

#include "perfcast/baseline.hpp"
#include "perfcast/complexity.hpp"

#include <Eigen/Dense>

#include <array>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace perfcast {

enum class MeasureTransform { Identity, Log1p };

using TransformSet = std::array<MeasureTransform, kMeasureCount>;

/// log1p on max_fisher_ratio, identity elsewhere.
TransformSet default_transforms();

/// Standardization + PCA over complexity vectors. Loadings hold every
/// eigen-direction (rows, descending eigenvalue); the first n_components are
/// the regressors.
struct ComplexityBasis {
  TransformSet transforms = default_transforms();
  MeasureVector mean = MeasureVector::Zero();
  MeasureVector std = MeasureVector::Ones();
  // Measures constant over the fitting set standardize to exactly zero.
  std::array<bool, kMeasureCount> active{};
  Eigen::Matrix<double, kMeasureCount, kMeasureCount> loadings = decltype(loadings)::Zero();
  MeasureVector eigenvalues = MeasureVector::Zero();
  MeasureVector explained_ratio = MeasureVector::Zero();
  int rank = 0;
  int n_components = 0;
  std::set<std::string> fitted_ids;

  MeasureVector standardize(const MeasureVector& raw) const;
};

struct PCScores {
  std::string dataset_id;
  Eigen::VectorXd scores;
  bool extrapolated = false; // some standardized measure far outside the fitting range
};

/// Eigen-decomposes the covariance of the standardized vectors. Components
/// with explained ratio below 1e-12 count as zero; n_components is
/// min(requested_n, rank). Each component's largest-magnitude loading is
/// positive.
ComplexityBasis fit_basis(std::span<const ComplexityVector> vectors, int requested_n,
                          const TransformSet& transforms = default_transforms());

PCScores project(const ComplexityBasis& basis, const ComplexityVector& vector, bool warn_extrapolation = true);

/// Scores for several vectors, one row each.
Eigen::MatrixXd project_rows(const ComplexityBasis& basis, std::span<const ComplexityVector> vectors);

std::vector<double> explained_variance(const ComplexityBasis& basis);

/// Measures of one component sorted by |loading| descending.
std::vector<std::pair<std::string, double>> loadings_report(const ComplexityBasis& basis, int component);

/// A dataset's complexity rows: the primary vector plus optional subsample
/// replicates used to enrich the basis fit.
struct DatasetComplexity {
  std::string dataset_id;
  ComplexityVector primary;
  std::vector<ComplexityVector> replicates;
};

/// Vectors to fit a basis on: primaries, plus replicates when requested.
std::vector<ComplexityVector> basis_fit_vectors(std::span<const DatasetComplexity> datasets, bool use_replicates);

struct ComponentSweep {
  int selected = 0;
  std::vector<int> candidates;
  std::vector<double> mse;
  std::vector<double> mae;
};

struct SelectionOptions {
  TransformSet transforms = default_transforms();
  bool use_replicates = true;
  BaselineMethod method = BaselineMethod::Ols;
  double lambda = kDefaultRidgeLambda;
};

/// Leave-one-dataset-out Stage-1 sweep over candidate component counts;
/// picks the lowest MSE, ties (within 1e-9 relative) to the smaller N.
ComponentSweep select_n_components(std::span<const DatasetComplexity> datasets, const Eigen::VectorXd& mean_accuracy,
                                   std::span<const int> candidates, const SelectionOptions& options = {});

} // namespace perfcast
