#pragma once

#include "perfcast/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace perfcast {

inline constexpr std::size_t kMeasureCount = 14;

/// Measure names in canonical column order (feature-based, linearity,
/// neighbourhood, dimensionality, class balance).
inline constexpr std::array<std::string_view, kMeasureCount> kMeasureNames{
    "covariance_mean",   "variance_mean",     "max_fisher_ratio", "overlap_region",  "max_feature_efficiency",
    "linear_error",      "nn_distance_ratio", "knn3_error",       "nn_nonlinearity", "raw_feature_count",
    "pca95_components",  "pca_retention_ratio", "class_entropy",  "imbalance_ratio"};

/// Index of a measure by name; throws InputError on unknown names.
std::size_t measure_index(std::string_view name);

using MeasureVector = Eigen::Matrix<double, kMeasureCount, 1>;

struct Provenance {
  std::string dataset_id;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

struct ComplexityVector {
  double covariance_mean = 0.0;
  double variance_mean = 0.0;
  double max_fisher_ratio = 0.0;
  double overlap_region = 0.0;
  double max_feature_efficiency = 0.0;
  double linear_error = 0.0;
  double nn_distance_ratio = 0.0;
  double knn3_error = 0.0;
  double nn_nonlinearity = 0.0;
  int raw_feature_count = 0;
  int pca95_components = 0;
  double pca_retention_ratio = 0.0;
  double class_entropy = 0.0;
  double imbalance_ratio = 0.0;
  Provenance provenance;

  MeasureVector values() const;
  static ComplexityVector from_values(const MeasureVector& v, Provenance provenance = {});
};

namespace complexity {

inline constexpr double kFisherCap = 1e6;

// Unless stated otherwise, measures read the table exactly as given;
// compute_all feeds them the standardized table.

double covariance_mean(const DatasetTable& table);
double variance_mean(const DatasetTable& table);
double max_fisher_ratio(const DatasetTable& table);
double overlap_region(const DatasetTable& table);
double max_feature_efficiency(const DatasetTable& table);

struct LinearClassifierOptions {
  int iterations = 500;
  double step = 0.1;
  double l2 = 1e-4;
  // Also score exact single-feature linear partitions and keep the lower
  // error (both are linear classifiers).
  bool axis_partition_refinement = true;
};

/// Training error of the softmax model alone (zero init, full-batch GD).
double softmax_training_error(const DatasetTable& table, const LinearClassifierOptions& options = {});

/// Lowest training error over single-feature linear partitions: each class
/// owns at most one contiguous interval of the feature. Exact for C <= 4;
/// above that, restricted to at most two intervals.
double axis_partition_error(const DatasetTable& table);

double linear_error(const DatasetTable& table, const LinearClassifierOptions& options = {});

double nn_distance_ratio(const DatasetTable& table);
double knn3_error(const DatasetTable& table);
double nn_nonlinearity(const DatasetTable& table, std::uint64_t seed);

struct Dimensionality {
  int raw_feature_count = 0;
  int pca95_components = 0;
  double pca_retention_ratio = 0.0;
};
Dimensionality dimensionality_measures(const DatasetTable& table);

struct ClassBalance {
  double class_entropy = 0.0;
  double imbalance_ratio = 0.0;
};
ClassBalance class_balance_measures(const DatasetTable& table);

/// All fourteen measures. Covariance/variance means come from the raw table;
/// everything else from its self-standardized copy. `fraction` is recorded
/// in the provenance only.
ComplexityVector compute_all(const DatasetTable& raw, std::uint64_t seed, double fraction = 1.0);

} // namespace complexity
} // namespace perfcast
