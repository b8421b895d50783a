#include "perfcast/basis.hpp"

#include "perfcast/error.hpp"
#include "perfcast/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace perfcast {

namespace {

constexpr double kRatioFloor = 1e-12;
constexpr double kExtrapolationZ = 10.0;
// measures whose spread is at rounding level count as constant
constexpr double kConstantTol = 1e-12;
constexpr double kOffConstantTol = 1e-9;

MeasureVector transformed(const MeasureVector& raw, const TransformSet& transforms)
{
  MeasureVector out = raw;
  for (std::size_t k = 0; k < kMeasureCount; ++k)
    if (transforms[k] == MeasureTransform::Log1p) out(Eigen::Index(k)) = std::log1p(raw(Eigen::Index(k)));
  return out;
}

} // namespace

TransformSet default_transforms()
{
  TransformSet t;
  t.fill(MeasureTransform::Identity);
  t[measure_index("max_fisher_ratio")] = MeasureTransform::Log1p;
  return t;
}

MeasureVector ComplexityBasis::standardize(const MeasureVector& raw) const
{
  MeasureVector z = (transformed(raw, transforms) - mean).cwiseQuotient(std);
  for (std::size_t k = 0; k < kMeasureCount; ++k)
    if (!active[k]) z(Eigen::Index(k)) = 0.0;
  return z;
}

ComplexityBasis fit_basis(std::span<const ComplexityVector> vectors, int requested_n, const TransformSet& transforms)
{
  if (vectors.size() < 2) throw InputError("basis: need at least 2 complexity vectors");
  if (requested_n < 1) throw InputError("basis: requested component count must be >= 1");

  const auto m = static_cast<Eigen::Index>(vectors.size());
  Eigen::Matrix<double, Eigen::Dynamic, kMeasureCount> data(m, kMeasureCount);
  ComplexityBasis basis;
  basis.transforms = transforms;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& v = vectors[static_cast<std::size_t>(i)];
    const MeasureVector raw = v.values();
    if (!raw.allFinite()) throw InputError("basis: non-finite measure in '" + v.provenance.dataset_id + "'");
    data.row(i) = transformed(raw, transforms).transpose();
    basis.fitted_ids.insert(v.provenance.dataset_id);
  }

  basis.mean = data.colwise().mean().transpose();
  for (Eigen::Index k = 0; k < data.cols(); ++k) {
    const auto col = data.col(k);
    const double spread = col.maxCoeff() - col.minCoeff();
    basis.active[static_cast<std::size_t>(k)] = spread > kConstantTol * std::max(1.0, std::abs(basis.mean(k)));
    const double var = (col.array() - basis.mean(k)).square().sum() / double(m - 1);
    basis.std(k) = std::max(std::sqrt(var), kStdFloor);
  }

  Eigen::Matrix<double, Eigen::Dynamic, kMeasureCount> z(m, kMeasureCount);
  for (Eigen::Index i = 0; i < m; ++i) z.row(i) = basis.standardize(vectors[static_cast<std::size_t>(i)].values()).transpose();
  const Eigen::Matrix<double, kMeasureCount, kMeasureCount> cov = (z.transpose() * z) / double(m - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kMeasureCount, kMeasureCount>> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("basis: eigendecomposition failed");

  // solver returns ascending order
  const MeasureVector values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = values.sum();
  for (Eigen::Index c = 0; c < Eigen::Index(kMeasureCount); ++c) {
    Eigen::Matrix<double, kMeasureCount, 1> dir = eig.eigenvectors().col(Eigen::Index(kMeasureCount) - 1 - c);
    Eigen::Index top = 0;
    dir.cwiseAbs().maxCoeff(&top);
    if (dir(top) < 0.0) dir = -dir;
    basis.loadings.row(c) = dir.transpose();
    const double ratio = total > 0.0 ? values(c) / total : 0.0;
    basis.explained_ratio(c) = ratio < kRatioFloor ? 0.0 : ratio;
    basis.eigenvalues(c) = basis.explained_ratio(c) > 0.0 ? values(c) : 0.0;
  }
  basis.rank = static_cast<int>((basis.explained_ratio.array() > 0.0).count());
  if (basis.rank == 0) throw InputError("basis: complexity vectors are all identical (rank 0)");
  basis.n_components = std::min(requested_n, basis.rank);
  return basis;
}

PCScores project(const ComplexityBasis& basis, const ComplexityVector& vector, bool warn_extrapolation)
{
  const MeasureVector raw = vector.values();
  if (!raw.allFinite()) throw InputError("project: non-finite measure in '" + vector.provenance.dataset_id + "'");
  PCScores out;
  out.dataset_id = vector.provenance.dataset_id;
  const MeasureVector z = basis.standardize(raw);
  const MeasureVector t = transformed(raw, basis.transforms);
  for (std::size_t k = 0; k < kMeasureCount; ++k) {
    const auto i = Eigen::Index(k);
    const bool off_constant =
        !basis.active[k] && std::abs(t(i) - basis.mean(i)) > kOffConstantTol * std::max(1.0, std::abs(basis.mean(i)));
    if (off_constant || std::abs(z(i)) > kExtrapolationZ) {
      out.extrapolated = true;
      if (warn_extrapolation)
        warn("project: '" + out.dataset_id + "' measure " + std::string(kMeasureNames[k]) +
             " lies far outside the basis fitting range");
    }
  }
  out.scores = basis.loadings.topRows(basis.n_components) * z;
  return out;
}

Eigen::MatrixXd project_rows(const ComplexityBasis& basis, std::span<const ComplexityVector> vectors)
{
  Eigen::MatrixXd out(static_cast<Eigen::Index>(vectors.size()), basis.n_components);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    out.row(Eigen::Index(i)) = project(basis, vectors[i]).scores.transpose();
  return out;
}

std::vector<double> explained_variance(const ComplexityBasis& basis)
{
  return {basis.explained_ratio.data(), basis.explained_ratio.data() + basis.explained_ratio.size()};
}

std::vector<std::pair<std::string, double>> loadings_report(const ComplexityBasis& basis, int component)
{
  if (component < 0 || component >= basis.n_components)
    throw InputError("loadings: component " + std::to_string(component) + " out of range [0, " +
                     std::to_string(basis.n_components) + ")");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < kMeasureCount; ++k)
    out.emplace_back(std::string(kMeasureNames[k]), basis.loadings(component, Eigen::Index(k)));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  return out;
}

std::vector<ComplexityVector> basis_fit_vectors(std::span<const DatasetComplexity> datasets, bool use_replicates)
{
  std::vector<ComplexityVector> out;
  for (const auto& d : datasets) {
    out.push_back(d.primary);
    if (!use_replicates) continue;
    for (const auto& r : d.replicates) {
      const auto& p = r.provenance;
      if (p.fraction == d.primary.provenance.fraction && p.seed == d.primary.provenance.seed) continue;
      out.push_back(r);
    }
  }
  return out;
}

ComponentSweep select_n_components(std::span<const DatasetComplexity> datasets, const Eigen::VectorXd& mean_accuracy,
                                   std::span<const int> candidates, const SelectionOptions& options)
{
  if (datasets.size() < 3) throw InputError("component selection: need at least 3 datasets");
  if (mean_accuracy.size() != static_cast<Eigen::Index>(datasets.size()))
    throw InputError("component selection: one mean accuracy per dataset required");

  ComponentSweep sweep;
  for (int n : candidates)
    if (n >= 1) sweep.candidates.push_back(n);
  std::sort(sweep.candidates.begin(), sweep.candidates.end());
  sweep.candidates.erase(std::unique(sweep.candidates.begin(), sweep.candidates.end()), sweep.candidates.end());
  if (sweep.candidates.empty()) throw InputError("component selection: no valid candidate component count");

  const auto m = static_cast<Eigen::Index>(datasets.size());
  std::vector<int> ridged; // candidates too wide for OLS on m - 1 datasets
  for (int n : sweep.candidates) {
    double sse = 0.0, sae = 0.0;
    bool ok = true;
    for (Eigen::Index held = 0; held < m && ok; ++held) {
      std::vector<DatasetComplexity> train;
      std::vector<ComplexityVector> train_primary;
      Eigen::VectorXd y(m - 1);
      for (Eigen::Index i = 0, r = 0; i < m; ++i) {
        if (i == held) continue;
        train.push_back(datasets[static_cast<std::size_t>(i)]);
        train_primary.push_back(datasets[static_cast<std::size_t>(i)].primary);
        y(r++) = mean_accuracy(i);
      }
      try {
        const auto fit_vectors = basis_fit_vectors(train, options.use_replicates);
        const auto basis = fit_basis(fit_vectors, n, options.transforms);
        auto method = options.method;
        if (method == BaselineMethod::Ols && m - 1 <= basis.n_components) {
          method = BaselineMethod::Ridge;
          if (ridged.empty() || ridged.back() != n) ridged.push_back(n);
        }
        const auto model = fit_stage1(project_rows(basis, train_primary), y, method, options.lambda);
        const double pred = predict_baseline(model, project(basis, datasets[static_cast<std::size_t>(held)].primary, false).scores);
        const double err = pred - mean_accuracy(held);
        sse += err * err;
        sae += std::abs(err);
      } catch (const NumericError&) {
        ok = false;
      }
    }
    sweep.mse.push_back(ok ? sse / double(m) : std::numeric_limits<double>::infinity());
    sweep.mae.push_back(ok ? sae / double(m) : std::numeric_limits<double>::infinity());
  }

  if (!ridged.empty()) {
    std::string list;
    for (int n : ridged) list += (list.empty() ? "" : ", ") + std::to_string(n);
    warn("component selection: " + std::to_string(m - 1) + " datasets per fold; N = " + list +
         " fitted with ridge instead of OLS");
  }

  const double best = *std::min_element(sweep.mse.begin(), sweep.mse.end());
  if (!std::isfinite(best)) throw NumericError("component selection: every candidate failed");
  for (std::size_t i = 0; i < sweep.candidates.size(); ++i)
    if (sweep.mse[i] <= best * (1.0 + 1e-9) + 1e-24) {
      sweep.selected = sweep.candidates[i];
      break;
    }
  return sweep;
}

} // namespace perfcast
