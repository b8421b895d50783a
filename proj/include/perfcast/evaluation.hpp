#pragma once

#include "perfcast/dataset.hpp"
#include "perfcast/forecaster.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace perfcast {

struct Metrics {
  double r2 = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

inline constexpr double kR2Floor = -1e9;

/// r2 = 1 - SSE / max(SST, 1e-12) with SST about the targets' own mean,
/// capped below at kR2Floor.
Metrics metrics(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions);

/// Record indices into the caller's record list.
struct Fold {
  std::string name;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

std::vector<Fold> folds_lodo(std::span<const PerformanceRecord> records);

/// One fold per domain; `domains` maps dataset id to its tag.
std::vector<Fold> folds_lodm(std::span<const PerformanceRecord> records,
                             const std::map<std::string, std::string>& domains);

/// Held-out share of each (dataset, family) group, rounded to nearest, at
/// least one row kept on each side.
Fold split_indist(std::span<const PerformanceRecord> records, double test_fraction, std::uint64_t seed);

enum class Protocol { InDistribution, Lodo, Lodm };
std::string protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);

struct EvalConfig {
  TrainingOptions training;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::map<std::string, std::string> domains; // needed by LODM
  int jobs = 1;                                // folds run concurrently when > 1
};

/// scope: stage1 (records vs baseline), stage1_mean (dataset mean accuracy
/// vs baseline), full, single_stage. dataset "all" is the fold total.
struct ScoreRow {
  std::string fold;
  std::string scope;
  std::string dataset;
  Metrics metrics;
};

struct LeakageAudit {
  std::vector<std::string> violations; // empty when no held-out id was fitted on
  bool clean() const { return violations.empty(); }
};

struct FoldSummary {
  std::string name;
  std::size_t train_records = 0;
  std::size_t test_records = 0;
  int n_components = 0;
  LeakageAudit audit;
};

struct EvalReport {
  std::string protocol;
  std::vector<FoldSummary> folds;
  std::vector<ScoreRow> rows;
  nlohmann::json config;

  const ScoreRow& find(const std::string& fold, const std::string& scope, const std::string& dataset = "all") const;
};

/// Checks the fitted id sets of every model stage against the held-out fold.
LeakageAudit audit_fold(const ForecastModel& model, std::span<const PerformanceRecord> test, bool dataset_level);

EvalReport run_protocol(std::span<const PerformanceRecord> records, const DcmTable& table, Protocol protocol,
                        const EvalConfig& config);

/// LODO folds; per fold the two-stage pipeline against the single-stage
/// learner on the same basis, arch features and seed. Rows are the fold
/// totals, scope full and single_stage.
EvalReport run_ablation(std::span<const PerformanceRecord> records, const DcmTable& table, const EvalConfig& config);

struct CurveRow {
  std::string dataset;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  MeasureVector deviation; // |sub - full| / |full|, or |sub| when full is 0
};

inline const std::vector<double> kDefaultCurveFractions{0.01, 0.02, 0.05, 0.10, 0.16, 0.25, 0.50, 1.0};

struct CurveOptions {
  std::vector<double> fractions = kDefaultCurveFractions;
  int seeds = 5;
  std::uint64_t base_seed = 0;
  bool stratified = true;
};

/// Recomputes complexity on subsamples of `table`, forecasts the dataset's
/// records with a model that never saw it, and reports MSE and per-measure
/// deviation from the full-data vector. Fractions below the subsample floor
/// are skipped with a warning.
std::vector<CurveRow> sample_size_curve(const DatasetTable& table, const ForecastModel& model,
                                        std::span<const PerformanceRecord> records, const CurveOptions& options = {});

struct CurvePoint {
  double fraction = 0.0;
  double median_mse = 0.0;
  double min_mse = 0.0;
  double max_mse = 0.0;
};

std::vector<CurvePoint> summarize_curve(std::span<const CurveRow> rows);

nlohmann::json training_to_json(const TrainingOptions& options);
nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json report_to_json(const EvalReport& report);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
nlohmann::json curve_to_json(std::span<const CurveRow> rows);
void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path);

} // namespace perfcast
