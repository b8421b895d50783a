#pragma once

#include "perfcast/baseline.hpp"
#include "perfcast/basis.hpp"
#include "perfcast/dcm_table.hpp"
#include "perfcast/records.hpp"
#include "perfcast/tree.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace perfcast {

/// Column layout of the offset learner's input:
/// [pc1..pcN | one-hot family | depth | filters | dense_units | dropout | log10 lr | baseline]
/// The single-stage variant drops the trailing baseline column.
struct FeatureSchema {
  int n_components = 0;
  std::vector<std::string> families = known_families();
  bool include_baseline = true;

  int size() const;
  std::vector<std::string> names() const;
  bool operator==(const FeatureSchema&) const = default;
};

/// Throws InputError on a family outside the schema or a score count other
/// than n_components. `base` is ignored without a baseline column.
Eigen::VectorXd build_features(const FeatureSchema& schema, const Eigen::VectorXd& scores, const ArchDescriptor& arch,
                               double base = 0.0);

enum class EnsembleKind { GradientBoosted, RandomForest };

struct OffsetParams {
  EnsembleKind kind = EnsembleKind::GradientBoosted;
  int estimators = 0;  // 0: 300 boosting rounds or 200 forest trees
  int max_depth = 0;   // 0: 3 for boosting, 8 for forests
  double learning_rate = 0.05;
  double min_leaf = 2;
  std::uint64_t seed = 0;

  /// Defaults filled in and ranges checked.
  OffsetParams resolved() const;
};

struct OffsetModel {
  EnsembleKind kind = EnsembleKind::GradientBoosted;
  double initial = 0.0;
  std::vector<RegressionTree> trees;
  std::vector<double> weights; // shrinkage for boosting, 1/T for forests
  FeatureSchema schema;
  OffsetParams params;
  std::set<std::string> fitted_ids; // record keys seen in training
  std::vector<double> training_mse; // boosting only; per round, not persisted
};

/// Training rows are put in a canonical order (features, then target) first,
/// so the fit does not depend on the caller's row order.
OffsetModel fit_stage2(const FeatureSchema& schema, const Eigen::MatrixXd& rows, const Eigen::VectorXd& offsets,
                       const OffsetParams& params, std::set<std::string> fitted_ids = {});

/// Same learner, fitted on accuracy directly (schema without the baseline).
OffsetModel fit_single_stage(const FeatureSchema& schema, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& accuracies, const OffsetParams& params,
                             std::set<std::string> fitted_ids = {});

double predict_offset(const OffsetModel& model, const Eigen::VectorXd& features);

struct Forecast {
  double base = 0.0;
  double offset = 0.0;
  double final_accuracy = 0.0;
  bool clamped = false;
};

/// base + offset clamped to [0, 1].
Forecast combine(double base, double offset);

Forecast predict_final(const BaselineModel& stage1, const OffsetModel& stage2, const Eigen::VectorXd& scores,
                       const ArchDescriptor& arch);

/// Stage-1 baselines, offsets and feature rows for a record set under fitted
/// basis and Stage-1 models. offsets = accuracy - base.
struct Stage2Data {
  Eigen::MatrixXd features;
  Eigen::VectorXd base;
  Eigen::VectorXd offset;
  Eigen::VectorXd accuracy;
};

Stage2Data stage2_data(const ComplexityBasis& basis, const BaselineModel& stage1, const FeatureSchema& schema,
                       const std::map<std::string, ComplexityVector>& primary,
                       std::span<const PerformanceRecord> records);

struct ForecastModel {
  ComplexityBasis basis;
  BaselineModel stage1;
  OffsetModel stage2;
  std::optional<ComponentSweep> selection; // when N was chosen automatically

  Forecast forecast(const ComplexityVector& complexity, const ArchDescriptor& arch) const;
};

struct TrainingOptions {
  int n_components = 0;          // 0: choose by leave-one-dataset-out sweep
  std::vector<int> candidates;   // empty: 1..min(7, rank), and at most datasets - 3 for OLS
  bool use_replicates = true;    // subsample rows enrich the basis fit
  BaselineMethod method = BaselineMethod::Ols;
  double lambda = kDefaultRidgeLambda;
  bool stage1_per_record = false; // regress records instead of dataset means
  OffsetParams stage2;
};

inline constexpr int kFallbackComponents = 7;

/// Complexity rows for the given datasets; throws InputError naming the first
/// one missing from the table.
std::vector<DatasetComplexity> gather_complexity(const DcmTable& table, const std::vector<std::string>& ids);

/// Mean accuracy per dataset, aligned with `ids`.
Eigen::VectorXd mean_accuracy(std::span<const PerformanceRecord> records, const std::vector<std::string>& ids);

/// Basis, Stage-1 and Stage-2 fitted on exactly the given records and the
/// complexity rows of their datasets.
ForecastModel fit_forecast_model(const DcmTable& table, std::span<const PerformanceRecord> records,
                                 const TrainingOptions& options = {});

} // namespace perfcast
