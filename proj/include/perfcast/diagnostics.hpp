#pragma once

#include "perfcast/basis.hpp"
#include "perfcast/dcm_table.hpp"
#include "perfcast/records.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace perfcast {

/// y ~ a + b x + c x^2 by least squares.
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Needs at least 3 distinct x values; throws NumericError when the design
/// is rank deficient.
QuadraticFit pc6_quadratic_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

enum class Regime { VarianceDominated, BiasDominated, Balanced };
std::string regime_name(Regime r);

struct RegimeReport {
  std::string dataset;
  double score = 0.0;
  double tau = 0.5;
  Regime regime = Regime::Balanced;
  std::vector<std::string> recommendations;
};

inline constexpr double kDefaultTau = 0.5;

/// score > tau: variance-dominated; score < -tau: bias-dominated.
RegimeReport classify_pc6(double score, double tau = kDefaultTau);

/// Score of a vector on any fitted component (0-based), including ones
/// beyond n_components; throws InputError past the basis rank.
double component_score(const ComplexityBasis& basis, const ComplexityVector& vector, int component);

struct MeasureAssociation {
  std::string measure;
  double association = 0.0; // signed Pearson r
  bool constant = false;    // measure did not vary across datasets
};

struct VariabilityReport {
  std::vector<std::pair<std::string, double>> offset_std; // per dataset
  std::vector<MeasureAssociation> ranking;                 // by |r| descending, constants last
};

/// Per-dataset standard deviation of offsets (accuracy minus the dataset's
/// Stage-1 baseline) across configurations, correlated with each raw measure.
VariabilityReport offset_variability_ranking(std::span<const PerformanceRecord> records, const DcmTable& table,
                                             const ComplexityBasis& basis, const BaselineModel& stage1);

struct AnovaSource {
  std::string name;
  double ss = 0.0;
  double df = 0.0;
  double f = 0.0; // NaN for the residual row
  double p = 1.0; // NaN for the residual row
};

struct AnovaTable {
  AnovaSource a, b, interaction, residual;
  double ss_total = 0.0;
  std::size_t n = 0;
};

/// Two-way fixed-effects ANOVA with interaction, sequential (type-I) sums of
/// squares in the order A, B, A x B. Levels are arbitrary integers; every
/// (a, b) cell must be populated.
AnovaTable two_way_anova(std::span<const int> a, std::span<const int> b, const Eigen::VectorXd& y,
                         const std::string& a_name = "A", const std::string& b_name = "B");

/// Factor A: quantile bin of the record's dataset variance_mean (bins taken
/// over records; empty bins dropped). Factor B: depth. Response: accuracy.
AnovaTable anova_variance_depth(std::span<const PerformanceRecord> records, const DcmTable& table, int quantiles = 5);

struct DepthGuidance {
  double value = 0.0;
  double lower = 0.0; // 1/3 quantile of the training values
  double upper = 0.0; // 2/3 quantile
  std::string recommendation; // "deep", "shallow/medium" or "no strong preference"
  std::string rule;
};

DepthGuidance depth_guidance(double variance_mean, std::span<const double> training_values);

nlohmann::json to_json(const QuadraticFit& fit);
nlohmann::json to_json(const RegimeReport& report);
nlohmann::json to_json(const VariabilityReport& report);
nlohmann::json to_json(const AnovaTable& table);
nlohmann::json to_json(const DepthGuidance& guidance);

} // namespace perfcast
