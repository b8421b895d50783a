#include "perfcast/forecaster.hpp"

#include "perfcast/error.hpp"
#include "perfcast/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perfcast {

int FeatureSchema::size() const
{
  return n_components + int(families.size()) + 5 + (include_baseline ? 1 : 0);
}

std::vector<std::string> FeatureSchema::names() const
{
  std::vector<std::string> out;
  for (int i = 1; i <= n_components; ++i) out.push_back("pc" + std::to_string(i));
  for (const auto& f : families) out.push_back("family_" + f);
  for (const char* name : {"depth", "filters", "dense_units", "dropout", "log10_learning_rate"}) out.emplace_back(name);
  if (include_baseline) out.emplace_back("baseline");
  return out;
}

Eigen::VectorXd build_features(const FeatureSchema& schema, const Eigen::VectorXd& scores, const ArchDescriptor& arch,
                               double base)
{
  if (scores.size() != schema.n_components)
    throw InputError("features: expected " + std::to_string(schema.n_components) + " component scores, got " +
                     std::to_string(scores.size()));
  validate(arch);
  const auto slot = std::find(schema.families.begin(), schema.families.end(), arch.family);
  if (slot == schema.families.end()) throw InputError("features: family '" + arch.family + "' is not in the model schema");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(schema.size());
  Eigen::Index i = 0;
  x.head(schema.n_components) = scores;
  i += schema.n_components;
  x(i + (slot - schema.families.begin())) = 1.0;
  i += Eigen::Index(schema.families.size());
  x(i++) = arch.depth;
  x(i++) = arch.filters;
  x(i++) = arch.dense_units;
  x(i++) = arch.dropout;
  x(i++) = std::log10(arch.learning_rate);
  if (schema.include_baseline) x(i++) = base;
  if (!x.allFinite()) throw InputError("features: non-finite value");
  return x;
}

OffsetParams OffsetParams::resolved() const
{
  OffsetParams p = *this;
  const bool boosting = kind == EnsembleKind::GradientBoosted;
  if (p.estimators == 0) p.estimators = boosting ? 300 : 200;
  if (p.max_depth == 0) p.max_depth = boosting ? 3 : 8;
  if (p.estimators < 0) throw InputError("stage 2: estimator count must be positive");
  if (p.max_depth < 1) throw InputError("stage 2: max depth must be >= 1");
  if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) throw InputError("stage 2: learning rate must lie in (0, 1]");
  if (!(p.min_leaf >= 1.0)) throw InputError("stage 2: min leaf must be >= 1");
  return p;
}

namespace {

double mse_of(const Eigen::VectorXd& y, const Eigen::VectorXd& f)
{
  return (y - f).squaredNorm() / double(y.size());
}

OffsetModel fit_ensemble(const FeatureSchema& schema, const Eigen::MatrixXd& rows, const Eigen::VectorXd& target,
                         const OffsetParams& params, std::set<std::string> fitted_ids, const char* what)
{
  const std::string ctx(what);
  if (rows.rows() != target.size()) throw InputError(ctx + ": feature rows and targets differ in count");
  if (rows.cols() != schema.size())
    throw InputError(ctx + ": rows have " + std::to_string(rows.cols()) + " columns, schema expects " +
                     std::to_string(schema.size()));
  if (rows.rows() < 10) throw InputError(ctx + ": need at least 10 training rows");
  if (!rows.allFinite() || !target.allFinite()) throw InputError(ctx + ": non-finite training data");

  OffsetModel model;
  model.params = params.resolved();
  model.kind = model.params.kind;
  model.schema = schema;
  model.fitted_ids = std::move(fitted_ids);

  // canonical row order: lexicographic in features, then target
  const Eigen::Index n = rows.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j)
      if (rows(a, j) != rows(b, j)) return rows(a, j) < rows(b, j);
    return target(a) < target(b);
  });
  Eigen::MatrixXd x(n, rows.cols());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = rows.row(order[std::size_t(i)]);
    y(i) = target(order[std::size_t(i)]);
  }
  if ((x.rowwise() - x.row(0)).cwiseAbs().maxCoeff() == 0.0)
    warn(ctx + ": all feature rows are identical; the model predicts a constant");

  const auto& p = model.params;
  CartOptions cart{p.max_depth, p.min_leaf, 0};
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  if (model.kind == EnsembleKind::GradientBoosted) {
    const bool constant = (y.array() == y(0)).all();
    model.initial = constant ? y(0) : y.mean();
    Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, model.initial);
    double mse = mse_of(y, fitted);
    for (int round = 0; round < p.estimators; ++round) {
      RegressionTree tree = fit_cart(x, y - fitted, ones, cart);
      Eigen::VectorXd next = fitted;
      for (Eigen::Index i = 0; i < n; ++i) next(i) += p.learning_rate * tree.predict(x.row(i).transpose());
      const double next_mse = mse_of(y, next);
      if (next_mse > mse) {
        // a rounding-level regression; keep the round as a no-op
        tree = RegressionTree::leaf(0.0);
      } else {
        fitted = std::move(next);
        mse = next_mse;
      }
      model.trees.push_back(std::move(tree));
      model.weights.push_back(p.learning_rate);
      model.training_mse.push_back(mse);
    }
  } else {
    rnd::Engine rng(p.seed);
    cart.max_features = int(std::ceil(std::sqrt(double(x.cols()))));
    model.initial = 0.0;
    for (int t = 0; t < p.estimators; ++t) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) w(Eigen::Index(rnd::uniform_index(rng, std::uint64_t(n)))) += 1.0;
      model.trees.push_back(fit_cart(x, y, w, cart, &rng));
      model.weights.push_back(1.0 / p.estimators);
    }
  }
  return model;
}

} // namespace

OffsetModel fit_stage2(const FeatureSchema& schema, const Eigen::MatrixXd& rows, const Eigen::VectorXd& offsets,
                       const OffsetParams& params, std::set<std::string> fitted_ids)
{
  if (!schema.include_baseline) throw InputError("stage 2: schema must carry the baseline column");
  return fit_ensemble(schema, rows, offsets, params, std::move(fitted_ids), "stage 2");
}

OffsetModel fit_single_stage(const FeatureSchema& schema, const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& accuracies, const OffsetParams& params,
                             std::set<std::string> fitted_ids)
{
  if (schema.include_baseline) throw InputError("single stage: schema must not carry a baseline column");
  return fit_ensemble(schema, rows, accuracies, params, std::move(fitted_ids), "single stage");
}

double predict_offset(const OffsetModel& model, const Eigen::VectorXd& features)
{
  if (features.size() != model.schema.size())
    throw InputError("offset model expects " + std::to_string(model.schema.size()) + " features, got " +
                     std::to_string(features.size()));
  double sum = model.initial;
  for (std::size_t t = 0; t < model.trees.size(); ++t) sum += model.weights[t] * model.trees[t].predict(features);
  return sum;
}

Forecast combine(double base, double offset)
{
  Forecast f{base, offset, base + offset, false};
  const double clamped = std::clamp(f.final_accuracy, 0.0, 1.0);
  f.clamped = clamped != f.final_accuracy;
  f.final_accuracy = clamped;
  return f;
}

Forecast predict_final(const BaselineModel& stage1, const OffsetModel& stage2, const Eigen::VectorXd& scores,
                       const ArchDescriptor& arch)
{
  const double base = predict_baseline(stage1, scores);
  return combine(base, predict_offset(stage2, build_features(stage2.schema, scores, arch, base)));
}

Stage2Data stage2_data(const ComplexityBasis& basis, const BaselineModel& stage1, const FeatureSchema& schema,
                       const std::map<std::string, ComplexityVector>& primary,
                       std::span<const PerformanceRecord> records)
{
  std::map<std::string, std::pair<Eigen::VectorXd, double>> cache;
  Stage2Data out;
  const auto m = Eigen::Index(records.size());
  out.features.resize(m, schema.size());
  out.base.resize(m);
  out.offset.resize(m);
  out.accuracy.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& rec = records[std::size_t(i)];
    auto it = cache.find(rec.dataset_id);
    if (it == cache.end()) {
      const auto found = primary.find(rec.dataset_id);
      if (found == primary.end()) throw InputError("dataset '" + rec.dataset_id + "' has no complexity row");
      const Eigen::VectorXd scores = project(basis, found->second).scores;
      it = cache.emplace(rec.dataset_id, std::pair{scores, predict_baseline(stage1, scores)}).first;
    }
    const auto& [scores, base] = it->second;
    out.base(i) = base;
    out.accuracy(i) = rec.accuracy;
    out.offset(i) = rec.accuracy - base;
    out.features.row(i) = build_features(schema, scores, rec.arch, base).transpose();
  }
  return out;
}

Forecast ForecastModel::forecast(const ComplexityVector& complexity, const ArchDescriptor& arch) const
{
  return predict_final(stage1, stage2, project(basis, complexity).scores, arch);
}

std::vector<DatasetComplexity> gather_complexity(const DcmTable& table, const std::vector<std::string>& ids)
{
  std::vector<DatasetComplexity> out;
  for (const auto& id : ids) {
    if (!table.contains(id)) throw InputError("dataset '" + id + "' is missing from the DCM table");
    out.push_back({id, table.primary(id), table.replicates(id)});
  }
  return out;
}

Eigen::VectorXd mean_accuracy(std::span<const PerformanceRecord> records, const std::vector<std::string>& ids)
{
  Eigen::VectorXd out(Eigen::Index(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : records)
      if (r.dataset_id == ids[k]) {
        sum += r.accuracy;
        ++count;
      }
    if (count == 0) throw InputError("dataset '" + ids[k] + "' has no performance records");
    out(Eigen::Index(k)) = sum / count;
  }
  return out;
}

ForecastModel fit_forecast_model(const DcmTable& table, std::span<const PerformanceRecord> records,
                                 const TrainingOptions& options)
{
  const auto ids = dataset_ids(records);
  if (ids.size() < 2) throw InputError("fit: need records from at least 2 datasets");
  if (options.n_components < 0) throw InputError("fit: component count must be >= 0");
  const auto datasets = gather_complexity(table, ids);
  const auto fit_vectors = basis_fit_vectors(datasets, options.use_replicates);
  const Eigen::VectorXd means = mean_accuracy(records, ids);

  ForecastModel model;
  int n = options.n_components;
  if (n == 0) {
    const int rank = fit_basis(fit_vectors, int(kMeasureCount), default_transforms()).rank;
    n = std::min(kFallbackComponents, rank);
    std::vector<int> candidates = options.candidates;
    if (candidates.empty()) {
      // inner OLS fits on m - 1 datasets keep at least one residual degree of freedom
      int top = n;
      if (options.method == BaselineMethod::Ols) top = std::max(1, std::min(n, int(ids.size()) - 3));
      for (int k = 1; k <= top; ++k) candidates.push_back(k);
    }
    if (ids.size() >= 3) {
      try {
        SelectionOptions sel{default_transforms(), options.use_replicates, options.method, options.lambda};
        model.selection = select_n_components(datasets, means, candidates, sel);
        n = model.selection->selected;
      } catch (const NumericError& e) {
        warn(std::string("fit: component selection failed (") + e.what() + "); using " + std::to_string(n));
      }
    }
  }
  model.basis = fit_basis(fit_vectors, n, default_transforms());

  std::map<std::string, ComplexityVector> primary;
  for (const auto& d : datasets) primary.emplace(d.dataset_id, d.primary);

  if (options.stage1_per_record) {
    std::map<std::string, Eigen::VectorXd> projected;
    for (const auto& [id, v] : primary) projected.emplace(id, project(model.basis, v).scores);
    Eigen::MatrixXd scores(Eigen::Index(records.size()), model.basis.n_components);
    Eigen::VectorXd acc(Eigen::Index(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
      scores.row(Eigen::Index(i)) = projected.at(records[i].dataset_id).transpose();
      acc(Eigen::Index(i)) = records[i].accuracy;
    }
    model.stage1 = fit_stage1(scores, acc, options.method, options.lambda);
  } else {
    std::vector<ComplexityVector> rows;
    for (const auto& d : datasets) rows.push_back(d.primary);
    model.stage1 = fit_stage1(project_rows(model.basis, rows), means, options.method, options.lambda);
  }
  model.stage1.fitted_ids = {ids.begin(), ids.end()};

  const FeatureSchema schema{model.basis.n_components};
  const auto data = stage2_data(model.basis, model.stage1, schema, primary, records);
  std::set<std::string> keys;
  for (const auto& r : records) keys.insert(record_key(r));
  model.stage2 = fit_stage2(schema, data.features, data.offset, options.stage2, std::move(keys));
  return model;
}

} // namespace perfcast
