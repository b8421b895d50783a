#include "perfcast/baseline.hpp"

#include "perfcast/error.hpp"
#include "perfcast/log.hpp"

#include <cmath>

namespace perfcast {

BaselineModel fit_stage1(const Eigen::MatrixXd& scores, const Eigen::VectorXd& accuracy, BaselineMethod method,
                         double lambda)
{
  const Eigen::Index m = scores.rows(), k = scores.cols();
  if (m != accuracy.size()) throw InputError("stage 1: score rows and accuracy count differ");
  if (m < 2) throw InputError("stage 1: need at least 2 datasets");
  if (!scores.allFinite() || !accuracy.allFinite()) throw InputError("stage 1: non-finite input");
  if ((accuracy.array() < 0.0).any() || (accuracy.array() > 1.0).any())
    throw InputError("stage 1: accuracies must lie in [0, 1]");
  if (lambda < 0.0) throw InputError("stage 1: ridge lambda must be >= 0");

  BaselineModel model;
  model.method = method;
  if (method == BaselineMethod::Ols && m <= k) {
    warn("stage 1: " + std::to_string(m) + " datasets for " + std::to_string(k) +
         " components; switching from OLS to ridge");
    model.method = BaselineMethod::Ridge;
  }

  if (model.method == BaselineMethod::Ols) {
    Eigen::MatrixXd design(m, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = scores;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k + 1)
      throw NumericError("stage 1: singular normal equations under OLS (rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(k + 1) + "); use ridge");
    const Eigen::VectorXd beta = qr.solve(accuracy);
    model.intercept = beta(0);
    model.coefficients = beta.tail(k);
  } else {
    model.lambda = lambda;
    const Eigen::RowVectorXd x_mean = scores.colwise().mean();
    const double y_mean = accuracy.mean();
    const Eigen::MatrixXd xc = scores.rowwise() - x_mean;
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || (k > 0 && ldlt.rcond() < 1e-14))
      throw NumericError("stage 1: ridge system is singular; increase lambda");
    model.coefficients = ldlt.solve(xc.transpose() * (accuracy.array() - y_mean).matrix());
    model.intercept = y_mean - x_mean.dot(model.coefficients);
  }

  const Eigen::VectorXd fitted = (scores * model.coefficients).array() + model.intercept;
  const double sse = (accuracy - fitted).squaredNorm();
  const auto dof = m - k - 1;
  model.residual_std = dof > 0 ? std::sqrt(sse / double(dof)) : 0.0;
  return model;
}

double predict_baseline(const BaselineModel& model, const Eigen::VectorXd& scores)
{
  if (scores.size() != model.coefficients.size())
    throw InputError("stage 1: expected " + std::to_string(model.coefficients.size()) + " scores, got " +
                     std::to_string(scores.size()));
  return model.intercept + model.coefficients.dot(scores);
}

} // namespace perfcast
