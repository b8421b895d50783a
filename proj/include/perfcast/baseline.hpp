#pragma once

#include <Eigen/Dense>

#include <set>
#include <string>

namespace perfcast {

enum class BaselineMethod { Ols, Ridge };

/// Stage-1 linear model: accuracy ~ intercept + coefficients . pc_scores.
struct BaselineModel {
  BaselineMethod method = BaselineMethod::Ols;
  double lambda = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double residual_std = 0.0;
  std::set<std::string> fitted_ids; // datasets (or records) the fit consumed
};

inline constexpr double kDefaultRidgeLambda = 1e-2;

/// Fits on one row per dataset. OLS with no more rows than regressors is
/// switched to Ridge (with a warning). Ridge leaves the intercept
/// unpenalized. Throws NumericError when the OLS design is rank deficient.
BaselineModel fit_stage1(const Eigen::MatrixXd& scores, const Eigen::VectorXd& accuracy,
                         BaselineMethod method = BaselineMethod::Ols, double lambda = kDefaultRidgeLambda);

/// Affine evaluation; not clamped.
double predict_baseline(const BaselineModel& model, const Eigen::VectorXd& scores);

} // namespace perfcast
