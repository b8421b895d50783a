#include "perfcast/evaluation.hpp"

#include "perfcast/csv.hpp"
#include "perfcast/error.hpp"
#include "perfcast/log.hpp"
#include "perfcast/model_io.hpp"
#include "perfcast/random.hpp"
#include "perfcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>

namespace perfcast {

using nlohmann::json;

Metrics metrics(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions)
{
  if (targets.size() == 0) throw InputError("metrics: empty input");
  if (targets.size() != predictions.size()) throw InputError("metrics: target and prediction counts differ");
  const Eigen::ArrayXd err = targets - predictions;
  Metrics m;
  m.n = std::size_t(targets.size());
  m.mse = err.square().mean();
  m.mae = err.abs().mean();
  const double sst = (targets.array() - targets.mean()).square().sum();
  m.r2 = std::max(1.0 - err.square().sum() / std::max(sst, 1e-12), kR2Floor);
  return m;
}

std::vector<Fold> folds_lodo(std::span<const PerformanceRecord> records)
{
  const auto ids = dataset_ids(records);
  if (ids.size() < 2) throw InputError("LODO needs records from at least 2 datasets");
  std::vector<Fold> folds;
  for (const auto& id : ids) {
    Fold f{id, {}, {}};
    for (std::size_t i = 0; i < records.size(); ++i) (records[i].dataset_id == id ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<Fold> folds_lodm(std::span<const PerformanceRecord> records,
                             const std::map<std::string, std::string>& domains)
{
  std::set<std::string> tags;
  for (const auto& id : dataset_ids(records)) {
    const auto it = domains.find(id);
    if (it == domains.end() || it->second.empty()) throw InputError("dataset '" + id + "' has no domain tag");
    tags.insert(it->second);
  }
  if (tags.size() < 2) throw InputError("LODM needs at least 2 domains");
  std::vector<Fold> folds;
  for (const auto& tag : tags) {
    Fold f{tag, {}, {}};
    for (std::size_t i = 0; i < records.size(); ++i)
      (domains.at(records[i].dataset_id) == tag ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

Fold split_indist(std::span<const PerformanceRecord> records, double test_fraction, std::uint64_t seed)
{
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("in-distribution test fraction must lie in (0, 1)");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> per_dataset;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[{records[i].dataset_id, records[i].arch.family}].push_back(i);
    ++per_dataset[records[i].dataset_id];
  }
  for (const auto& [id, count] : per_dataset)
    if (count < 2) throw InputError("dataset '" + id + "' has fewer than 2 records; cannot split");

  rnd::Engine rng(seed);
  Fold fold{"indist", {}, {}};
  for (auto& [key, members] : groups) {
    rnd::shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    auto n_test = std::size_t(std::llround(test_fraction * double(n)));
    if (n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    fold.test.insert(fold.test.end(), members.begin(), members.begin() + std::ptrdiff_t(n_test));
    fold.train.insert(fold.train.end(), members.begin() + std::ptrdiff_t(n_test), members.end());
  }
  std::sort(fold.test.begin(), fold.test.end());
  std::sort(fold.train.begin(), fold.train.end());
  return fold;
}

std::string protocol_name(Protocol p)
{
  switch (p) {
  case Protocol::InDistribution: return "indist";
  case Protocol::Lodo: return "lodo";
  case Protocol::Lodm: return "lodm";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name)
{
  if (name == "indist") return Protocol::InDistribution;
  if (name == "lodo") return Protocol::Lodo;
  if (name == "lodm") return Protocol::Lodm;
  throw InputError("unknown protocol '" + name + "' (expected indist, lodo or lodm)");
}

const ScoreRow& EvalReport::find(const std::string& fold, const std::string& scope, const std::string& dataset) const
{
  for (const auto& r : rows)
    if (r.fold == fold && r.scope == scope && r.dataset == dataset) return r;
  throw InputError("report has no row for fold '" + fold + "', scope '" + scope + "', dataset '" + dataset + "'");
}

LeakageAudit audit_fold(const ForecastModel& model, std::span<const PerformanceRecord> test, bool dataset_level)
{
  LeakageAudit audit;
  std::set<std::string> test_ids, test_keys;
  for (const auto& r : test) {
    test_ids.insert(r.dataset_id);
    test_keys.insert(record_key(r));
  }
  auto check = [&](const std::set<std::string>& fitted, const std::set<std::string>& held, const char* stage) {
    for (const auto& id : fitted)
      if (held.count(id)) audit.violations.push_back(std::string(stage) + " was fitted on held-out '" + id + "'");
  };
  if (dataset_level) {
    check(model.basis.fitted_ids, test_ids, "basis");
    check(model.stage1.fitted_ids, test_ids, "stage 1");
  }
  check(model.stage2.fitted_ids, test_keys, "stage 2");
  return audit;
}

namespace {

std::vector<PerformanceRecord> pick(std::span<const PerformanceRecord> records, const std::vector<std::size_t>& idx)
{
  std::vector<PerformanceRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records[i]);
  return out;
}

template <class E>
[[noreturn]] void rethrow_with(const std::string& context, const E& e)
{
  throw E(context + ": " + e.what());
}

// Overall plus per-dataset metrics of one scope.
void score(std::vector<ScoreRow>& rows, const std::string& fold, const std::string& scope,
           std::span<const PerformanceRecord> test, const Eigen::VectorXd& pred)
{
  Eigen::VectorXd target(Eigen::Index(test.size()));
  for (std::size_t i = 0; i < test.size(); ++i) target(Eigen::Index(i)) = test[i].accuracy;
  rows.push_back({fold, scope, "all", metrics(target, pred)});
  for (const auto& id : dataset_ids(test)) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < test.size(); ++i)
      if (test[i].dataset_id == id) idx.push_back(Eigen::Index(i));
    rows.push_back({fold, scope, id, metrics(target(idx), pred(idx))});
  }
}

struct FoldOutcome {
  FoldSummary summary;
  std::vector<ScoreRow> rows;
};

FoldOutcome evaluate_fold(std::span<const PerformanceRecord> records, const DcmTable& table, const Fold& fold,
                          const EvalConfig& config, bool dataset_level, bool ablation)
{
  try {
    const auto train = pick(records, fold.train);
    const auto test = pick(records, fold.test);
    if (train.empty() || test.empty()) throw InputError("empty train or test side");
    const ForecastModel model = fit_forecast_model(table, train, config.training);

    FoldOutcome out;
    out.summary = {fold.name, train.size(), test.size(), model.basis.n_components, audit_fold(model, test, dataset_level)};
    if (!out.summary.audit.clean()) throw InputError("leakage audit failed: " + out.summary.audit.violations.front());

    // one projection (and at most one extrapolation warning) per dataset
    std::map<std::string, Eigen::VectorXd> scores;
    auto scores_of = [&](const std::string& id) -> const Eigen::VectorXd& {
      auto it = scores.find(id);
      if (it == scores.end()) it = scores.emplace(id, project(model.basis, table.primary(id)).scores).first;
      return it->second;
    };

    const auto m = Eigen::Index(test.size());
    Eigen::VectorXd base(m), final_pred(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& r = test[std::size_t(i)];
      const auto f = predict_final(model.stage1, model.stage2, scores_of(r.dataset_id), r.arch);
      base(i) = f.base;
      final_pred(i) = f.final_accuracy;
    }

    if (ablation) {
      FeatureSchema schema{model.basis.n_components};
      schema.include_baseline = false;
      Eigen::MatrixXd x(Eigen::Index(train.size()), schema.size());
      Eigen::VectorXd acc(Eigen::Index(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i) {
        x.row(Eigen::Index(i)) = build_features(schema, scores_of(train[i].dataset_id), train[i].arch).transpose();
        acc(Eigen::Index(i)) = train[i].accuracy;
      }
      const auto single = fit_single_stage(schema, x, acc, config.training.stage2, model.stage2.fitted_ids);
      Eigen::VectorXd single_pred(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = test[std::size_t(i)];
        single_pred(i) = std::clamp(predict_offset(single, build_features(schema, scores_of(r.dataset_id), r.arch)), 0.0, 1.0);
      }
      Eigen::VectorXd target(m);
      for (Eigen::Index i = 0; i < m; ++i) target(i) = test[std::size_t(i)].accuracy;
      out.rows.push_back({fold.name, "full", "all", metrics(target, final_pred)});
      out.rows.push_back({fold.name, "single_stage", "all", metrics(target, single_pred)});
      return out;
    }

    score(out.rows, fold.name, "stage1", test, base);
    score(out.rows, fold.name, "full", test, final_pred);

    const auto ids = dataset_ids(test);
    const Eigen::VectorXd means = mean_accuracy(test, ids);
    Eigen::VectorXd dataset_base(means.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
      dataset_base(Eigen::Index(k)) = predict_baseline(model.stage1, scores_of(ids[k]));
    out.rows.push_back({fold.name, "stage1_mean", "all", metrics(means, dataset_base)});
    return out;
  } catch (const NumericError& e) {
    rethrow_with("fold '" + fold.name + "'", e);
  } catch (const InputError& e) {
    rethrow_with("fold '" + fold.name + "'", e);
  }
}

EvalReport run_folds(std::span<const PerformanceRecord> records, const DcmTable& table, const std::vector<Fold>& folds,
                     const EvalConfig& config, const std::string& protocol, bool dataset_level, bool ablation)
{
  std::vector<FoldOutcome> outcomes;
  if (config.jobs > 1) {
    std::vector<std::future<FoldOutcome>> pending;
    for (std::size_t start = 0; start < folds.size(); start += std::size_t(config.jobs)) {
      for (std::size_t k = start; k < std::min(folds.size(), start + std::size_t(config.jobs)); ++k)
        pending.push_back(std::async(std::launch::async, evaluate_fold, records, std::cref(table), std::cref(folds[k]),
                                     std::cref(config), dataset_level, ablation));
      for (auto& p : pending) outcomes.push_back(p.get());
      pending.clear();
    }
  } else {
    for (const auto& f : folds) outcomes.push_back(evaluate_fold(records, table, f, config, dataset_level, ablation));
  }

  EvalReport report;
  report.protocol = protocol;
  for (auto& o : outcomes) {
    report.folds.push_back(std::move(o.summary));
    report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
  }
  report.config = {{"protocol", protocol},
                   {"training", training_to_json(config.training)},
                   {"fold_count", folds.size()}};
  if (protocol == "indist") {
    report.config["test_fraction"] = config.test_fraction;
    report.config["split_seed"] = config.split_seed;
  }
  return report;
}

} // namespace

EvalReport run_protocol(std::span<const PerformanceRecord> records, const DcmTable& table, Protocol protocol,
                        const EvalConfig& config)
{
  std::vector<Fold> folds;
  switch (protocol) {
  case Protocol::InDistribution: folds = {split_indist(records, config.test_fraction, config.split_seed)}; break;
  case Protocol::Lodo: folds = folds_lodo(records); break;
  case Protocol::Lodm: folds = folds_lodm(records, config.domains); break;
  }
  return run_folds(records, table, folds, config, protocol_name(protocol), protocol != Protocol::InDistribution, false);
}

EvalReport run_ablation(std::span<const PerformanceRecord> records, const DcmTable& table, const EvalConfig& config)
{
  auto report = run_folds(records, table, folds_lodo(records), config, "ablation", true, true);
  return report;
}

std::vector<CurveRow> sample_size_curve(const DatasetTable& table, const ForecastModel& model,
                                        std::span<const PerformanceRecord> records, const CurveOptions& options)
{
  const std::string& id = table.dataset_id;
  if (model.stage1.fitted_ids.count(id) || model.basis.fitted_ids.count(id))
    throw InputError("sample-size curve: the model was fitted on '" + id + "'");
  if (options.seeds < 1) throw InputError("sample-size curve: need at least one seed");
  std::vector<PerformanceRecord> own;
  for (const auto& r : records)
    if (r.dataset_id == id) own.push_back(r);
  if (own.empty()) throw InputError("sample-size curve: no records for '" + id + "'");
  Eigen::VectorXd target(Eigen::Index(own.size()));
  for (std::size_t i = 0; i < own.size(); ++i) target(Eigen::Index(i)) = own[i].accuracy;

  const MeasureVector full = complexity::compute_all(table, options.base_seed, 1.0).values();
  std::vector<CurveRow> rows;
  bool extrapolated = false;
  for (double fraction : options.fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("sample-size curve: fractions must lie in (0, 1]");
    for (int s = 0; s < options.seeds; ++s) {
      const std::uint64_t seed = options.base_seed + std::uint64_t(s);
      ComplexityVector sub;
      try {
        const DatasetTable part = fraction == 1.0 ? table : subsample(table, fraction, seed, options.stratified);
        sub = complexity::compute_all(part, seed, fraction);
      } catch (const InputError& e) {
        warn("sample-size curve: skipping fraction " + csv::format_double(fraction) + ": " + e.what());
        break;
      }
      const PCScores scores = project(model.basis, sub, false);
      extrapolated = extrapolated || scores.extrapolated;
      Eigen::VectorXd pred(target.size());
      for (std::size_t i = 0; i < own.size(); ++i)
        pred(Eigen::Index(i)) = predict_final(model.stage1, model.stage2, scores.scores, own[i].arch).final_accuracy;
      CurveRow row{id, fraction, seed, metrics(target, pred).mse, {}};
      const MeasureVector v = sub.values();
      for (Eigen::Index k = 0; k < v.size(); ++k)
        row.deviation(k) = full(k) != 0.0 ? std::abs(v(k) - full(k)) / std::abs(full(k)) : std::abs(v(k));
      rows.push_back(std::move(row));
    }
  }
  if (extrapolated) warn("sample-size curve: some '" + id + "' subsamples lie far outside the basis fitting range");
  return rows;
}

std::vector<CurvePoint> summarize_curve(std::span<const CurveRow> rows)
{
  std::map<double, std::vector<double>> by_fraction;
  for (const auto& r : rows) by_fraction[r.fraction].push_back(r.mse);
  std::vector<CurvePoint> out;
  for (auto& [fraction, mse] : by_fraction) {
    const Eigen::Map<const Eigen::VectorXd> v(mse.data(), Eigen::Index(mse.size()));
    out.push_back({fraction, stats::median(mse), v.minCoeff(), v.maxCoeff()});
  }
  return out;
}

json training_to_json(const TrainingOptions& o)
{
  json j{{"n_components", o.n_components == 0 ? json("auto") : json(o.n_components)},
         {"use_replicates", o.use_replicates},
         {"stage1_method", o.method == BaselineMethod::Ols ? "ols" : "ridge"},
         {"ridge_lambda", o.lambda},
         {"stage1_per_record", o.stage1_per_record},
         {"stage2", params_to_json(o.stage2)}};
  if (!o.candidates.empty()) j["candidates"] = o.candidates;
  return j;
}

json metrics_to_json(const Metrics& m)
{
  return {{"r2", m.r2}, {"mse", m.mse}, {"mae", m.mae}, {"n", m.n}};
}

json report_to_json(const EvalReport& report)
{
  json folds = json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"fold", f.name},
                     {"train_records", f.train_records},
                     {"test_records", f.test_records},
                     {"n_components", f.n_components},
                     {"leakage_violations", f.audit.violations}});
  json rows = json::array();
  for (const auto& r : report.rows) {
    json j = metrics_to_json(r.metrics);
    j["fold"] = r.fold;
    j["scope"] = r.scope;
    j["dataset"] = r.dataset;
    rows.push_back(j);
  }
  return {{"protocol", report.protocol}, {"config", report.config}, {"folds", folds}, {"rows", rows}};
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "protocol,fold,scope,dataset,r2,mse,mae,n\n";
  for (const auto& r : report.rows)
    out << csv::join({report.protocol, r.fold, r.scope, r.dataset, csv::format_double(r.metrics.r2),
                      csv::format_double(r.metrics.mse), csv::format_double(r.metrics.mae), std::to_string(r.metrics.n)})
        << '\n';
}

json curve_to_json(std::span<const CurveRow> rows)
{
  json out = json::array();
  for (const auto& r : rows) {
    json dev;
    for (std::size_t k = 0; k < kMeasureCount; ++k) dev[std::string(kMeasureNames[k])] = r.deviation(Eigen::Index(k));
    out.push_back({{"dataset", r.dataset}, {"fraction", r.fraction}, {"seed", r.seed}, {"mse", r.mse}, {"deviation", dev}});
  }
  json summary = json::array();
  for (const auto& p : summarize_curve(rows))
    summary.push_back({{"fraction", p.fraction}, {"median_mse", p.median_mse}, {"min_mse", p.min_mse}, {"max_mse", p.max_mse}});
  return {{"rows", out}, {"summary", summary}};
}

void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  std::vector<std::string> header{"dataset", "fraction", "seed", "mse"};
  for (auto name : kMeasureNames) header.emplace_back(name);
  out << csv::join(header) << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> f{r.dataset, csv::format_double(r.fraction), std::to_string(r.seed), csv::format_double(r.mse)};
    for (Eigen::Index k = 0; k < r.deviation.size(); ++k) f.push_back(csv::format_double(r.deviation(k)));
    out << csv::join(f) << '\n';
  }
}

} // namespace perfcast
