// forecast: command-line front end for the perfcast pipeline.
//
// JSON goes to stdout, tables to CSV files under --out-dir, and a short
// human summary to stderr. Exit codes: 0 success, 2 input error, 3 numeric
// failure.

#include "perfcast/complexity.hpp"
#include "perfcast/csv.hpp"
#include "perfcast/dcm_table.hpp"
#include "perfcast/diagnostics.hpp"
#include "perfcast/error.hpp"
#include "perfcast/evaluation.hpp"
#include "perfcast/forecaster.hpp"
#include "perfcast/model_io.hpp"
#include "perfcast/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perfcast;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  bool no_timestamp = false;
  int jobs = 1;
};

struct TrainingFlags {
  std::string components = "auto";
  std::string kind = "gbt";
  int estimators = 0;
  int max_depth = 0;
  double learning_rate = 0.05;
  double min_leaf = 2;
  std::string method = "ols";
  double lambda = kDefaultRidgeLambda;
  bool no_replicates = false;
  bool per_record = false;

  void attach(CLI::App* cmd)
  {
    cmd->add_option("--components", components, "Basis size N, or 'auto'")->capture_default_str();
    cmd->add_option("--kind", kind, "Stage-2 learner: gbt or rf")->capture_default_str();
    cmd->add_option("--estimators", estimators, "Boosting rounds / forest trees (0: 300 / 200)");
    cmd->add_option("--max-depth", max_depth, "Tree depth (0: 3 for gbt, 8 for rf)");
    cmd->add_option("--learning-rate", learning_rate, "Boosting shrinkage")->capture_default_str();
    cmd->add_option("--min-leaf", min_leaf, "Minimum rows per leaf")->capture_default_str();
    cmd->add_option("--method", method, "Stage-1 regression: ols or ridge")->capture_default_str();
    cmd->add_option("--ridge-lambda", lambda, "Ridge penalty")->capture_default_str();
    cmd->add_flag("--no-replicates", no_replicates, "Fit the basis on primary DCM rows only");
    cmd->add_flag("--per-record", per_record, "Stage 1 regresses records instead of dataset means");
  }

  TrainingOptions resolve(std::uint64_t seed) const
  {
    TrainingOptions o;
    if (components != "auto") {
      o.n_components = int(csv::parse_int(components, "--components"));
      if (o.n_components < 1) throw InputError("--components must be 'auto' or a positive integer");
    }
    o.use_replicates = !no_replicates;
    if (method == "ols") o.method = BaselineMethod::Ols;
    else if (method == "ridge") o.method = BaselineMethod::Ridge;
    else throw InputError("--method must be ols or ridge");
    if (!(lambda >= 0.0)) throw InputError("--ridge-lambda must be >= 0");
    o.lambda = lambda;
    o.stage1_per_record = per_record;
    o.stage2.kind = parse_kind(kind);
    o.stage2.estimators = estimators;
    o.stage2.max_depth = max_depth;
    o.stage2.learning_rate = learning_rate;
    o.stage2.min_leaf = min_leaf;
    o.stage2.seed = seed;
    o.stage2.resolved(); // validates ranges before any work starts
    return o;
  }
};

fs::path under(const Globals& g, const fs::path& p)
{
  return p.is_absolute() ? p : g.out_dir / p;
}

void prepare_out_dir(const Globals& g)
{
  fs::create_directories(g.out_dir);
}

void emit(const Globals& g, json doc)
{
  if (!g.no_timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc["timestamp"] = buf;
  }
  std::cout << doc.dump(2) << '\n';
}

void write_json(const Globals& g, const fs::path& path, json doc)
{
  if (!g.no_timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc["timestamp"] = buf;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

ArchDescriptor arch_from(const std::string& family, int depth, int filters, int dense, double dropout, double lr)
{
  ArchDescriptor a{canonical_family(family), depth, filters, dense, dropout, lr};
  validate(a);
  return a;
}

// --- dcm -------------------------------------------------------------------

struct DcmArgs {
  std::string manifest;
  std::vector<std::string> datasets;
  bool all = false;
  double fraction = 1.0;
  bool unstratified = false;
  std::string out = "dcm.csv";
};

int cmd_dcm(const Globals& g, const DcmArgs& a)
{
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw InputError("--fraction must lie in (0, 1]");
  if (a.all == !a.datasets.empty()) throw InputError("give either --all or one or more --dataset ids");
  const auto manifest = load_manifest(a.manifest);
  std::vector<const ManifestEntry*> chosen;
  if (a.all)
    for (const auto& e : manifest.entries) chosen.push_back(&e);
  for (const auto& id : a.datasets) {
    const auto* e = manifest.find(id);
    if (!e) throw InputError("dataset '" + id + "' is not in the manifest");
    chosen.push_back(e);
  }

  prepare_out_dir(g);
  const fs::path out = under(g, a.out);
  DcmTable table = fs::exists(out) ? DcmTable::load(out) : DcmTable{};
  json rows = json::array();
  for (const auto* e : chosen) {
    try {
      DatasetTable t = load_dataset(*e);
      if (a.fraction < 1.0) t = subsample(t, a.fraction, g.seed, !a.unstratified);
      auto v = complexity::compute_all(t, g.seed, a.fraction);
      std::cerr << "dcm: " << e->dataset_id << " (" << t.rows() << " rows, " << t.cols() << " features)\n";
      json row{{"dataset_id", e->dataset_id}, {"fraction", a.fraction}, {"seed", g.seed}};
      const auto values = v.values();
      for (std::size_t k = 0; k < kMeasureCount; ++k) row[std::string(kMeasureNames[k])] = values(Eigen::Index(k));
      rows.push_back(row);
      table.upsert(std::move(v));
    } catch (const InputError& err) {
      throw InputError("dataset '" + e->dataset_id + "': " + err.what());
    } catch (const NumericError& err) {
      throw NumericError("dataset '" + e->dataset_id + "': " + err.what());
    }
  }
  table.save(out);
  emit(g, {{"command", "dcm"}, {"output", out.string()}, {"rows", rows}});
  return 0;
}

// --- fit / predict -----------------------------------------------------------

struct FitArgs {
  std::string records;
  std::string dcm;
  std::string model = "model.json";
  TrainingFlags training;
};

json sweep_json(const ComponentSweep& s)
{
  return {{"selected", s.selected}, {"candidates", s.candidates}, {"mse", s.mse}, {"mae", s.mae}};
}

int cmd_fit(const Globals& g, const FitArgs& a)
{
  const auto options = a.training.resolve(g.seed);
  const auto records = load_records(a.records);
  const auto table = DcmTable::load(a.dcm);
  const auto model = fit_forecast_model(table, records, options);

  prepare_out_dir(g);
  const fs::path out = under(g, a.model);
  save_model(model, out);

  const auto m = Eigen::Index(records.size());
  Eigen::VectorXd target(m), base(m), final_pred(m);
  std::map<std::string, Eigen::VectorXd> scores;
  for (const auto& id : model.stage1.fitted_ids) scores.emplace(id, project(model.basis, table.primary(id)).scores);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = records[std::size_t(i)];
    const auto f = predict_final(model.stage1, model.stage2, scores.at(r.dataset_id), r.arch);
    target(i) = r.accuracy;
    base(i) = f.base;
    final_pred(i) = f.final_accuracy;
  }
  json doc{{"command", "fit"},
           {"model", out.string()},
           {"n_components", model.basis.n_components},
           {"basis_rank", model.basis.rank},
           {"explained_variance", explained_variance(model.basis)},
           {"datasets", model.stage1.fitted_ids},
           {"records", records.size()},
           {"training", training_to_json(options)},
           {"train_metrics", {{"stage1", metrics_to_json(metrics(target, base))}, {"full", metrics_to_json(metrics(target, final_pred))}}}};
  if (model.selection) doc["selection"] = sweep_json(*model.selection);
  std::cerr << "fit: N=" << model.basis.n_components << " on " << model.stage1.fitted_ids.size() << " datasets, "
            << records.size() << " records\n";
  emit(g, doc);
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string dcm;
  std::string dataset;
  std::string family;
  int depth = 0, filters = 0, dense = 0;
  double dropout = 0.0, lr = 0.0;
};

int cmd_predict(const Globals& g, const PredictArgs& a)
{
  const auto model = load_model(a.model);
  const auto table = DcmTable::load(a.dcm);
  const auto arch = arch_from(a.family, a.depth, a.filters, a.dense, a.dropout, a.lr);
  const auto& complexity = table.primary(a.dataset);
  const auto scores = project(model.basis, complexity);
  const auto f = predict_final(model.stage1, model.stage2, scores.scores, arch);
  emit(g, {{"command", "predict"},
           {"dataset", a.dataset},
           {"base", f.base},
           {"offset", f.offset},
           {"final", f.final_accuracy},
           {"clamped", f.clamped},
           {"extrapolated", scores.extrapolated}});
  return 0;
}

// --- eval / ablate -------------------------------------------------------------

struct EvalArgs {
  std::string records;
  std::string dcm;
  std::string protocol = "lodo";
  std::string manifest;
  double test_fraction = 0.2;
  TrainingFlags training;
};

EvalConfig eval_config(const Globals& g, const EvalArgs& a)
{
  EvalConfig c;
  c.training = a.training.resolve(g.seed);
  c.test_fraction = a.test_fraction;
  c.split_seed = g.seed;
  c.jobs = g.jobs;
  if (!a.manifest.empty()) c.domains = load_manifest(a.manifest).domains();
  return c;
}

void summarize(const EvalReport& report, const std::string& scope)
{
  for (const auto& f : report.folds) {
    const auto& row = report.find(f.name, scope);
    std::cerr << report.protocol << " " << f.name << ": " << scope << " mse=" << row.metrics.mse
              << " r2=" << row.metrics.r2 << " N=" << f.n_components << '\n';
  }
}

int cmd_eval(const Globals& g, const EvalArgs& a)
{
  const auto protocol = parse_protocol(a.protocol);
  if (protocol == Protocol::Lodm && a.manifest.empty()) throw InputError("lodm needs --manifest for domain tags");
  const auto config = eval_config(g, a);
  const auto records = load_records(a.records);
  const auto table = DcmTable::load(a.dcm);
  const auto report = run_protocol(records, table, protocol, config);
  prepare_out_dir(g);
  const auto stem = "eval_" + report.protocol;
  write_report_csv(report, under(g, stem + ".csv"));
  write_json(g, under(g, stem + ".json"), report_to_json(report));
  summarize(report, "full");
  auto doc = report_to_json(report);
  doc["command"] = "eval";
  emit(g, doc);
  return 0;
}

int cmd_ablate(const Globals& g, const EvalArgs& a)
{
  const auto config = eval_config(g, a);
  const auto records = load_records(a.records);
  const auto table = DcmTable::load(a.dcm);
  const auto report = run_ablation(records, table, config);
  prepare_out_dir(g);
  write_report_csv(report, under(g, "ablation.csv"));
  write_json(g, under(g, "ablation.json"), report_to_json(report));
  for (const auto& f : report.folds)
    std::cerr << "ablation " << f.name << ": two-stage mse=" << report.find(f.name, "full").metrics.mse
              << " single-stage mse=" << report.find(f.name, "single_stage").metrics.mse << '\n';
  auto doc = report_to_json(report);
  doc["command"] = "ablate";
  emit(g, doc);
  return 0;
}

// --- diagnose / guide ------------------------------------------------------------

struct DiagnoseArgs {
  std::string what = "all";
  std::string points;
  std::string model;
  std::string dcm;
  std::string records;
  double tau = kDefaultTau;
  int quantiles = 5;
};

QuadraticFit fit_points_file(const std::string& path)
{
  const auto t = csv::read(path);
  const auto cx = t.require_column("pc6", path);
  const auto cy = t.require_column("mse", path);
  Eigen::VectorXd x(Eigen::Index(t.rows.size())), y(Eigen::Index(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(t.lines[r]);
    x(Eigen::Index(r)) = csv::parse_double(t.rows[r][cx], where + " pc6");
    y(Eigen::Index(r)) = csv::parse_double(t.rows[r][cy], where + " mse");
  }
  return pc6_quadratic_fit(x, y);
}

int cmd_diagnose(const Globals& g, const DiagnoseArgs& a)
{
  static const std::set<std::string> parts{"all", "pc6", "regimes", "variability", "anova"};
  if (!parts.count(a.what)) throw InputError("diagnose: unknown part '" + a.what + "'");
  if (!(a.tau > 0.0)) throw InputError("--tau must be > 0");
  const bool all = a.what == "all";
  json doc{{"command", "diagnose"}};
  prepare_out_dir(g);

  if (a.what == "pc6" || (all && !a.points.empty())) {
    if (a.points.empty()) throw InputError("diagnose pc6 needs --points (CSV with pc6,mse columns)");
    const auto fit = fit_points_file(a.points);
    doc["pc6"] = to_json(fit);
    std::ofstream(under(g, "pc6_fit.csv")) << "a,b,c,r2,points\n"
                                          << csv::join({csv::format_double(fit.a), csv::format_double(fit.b),
                                                        csv::format_double(fit.c), csv::format_double(fit.r2),
                                                        std::to_string(fit.points)})
                                          << '\n';
    std::cerr << "pc6 fit: mse ~ " << fit.a << " + " << fit.b << " x + " << fit.c << " x^2 (r2 " << fit.r2 << ")\n";
  }

  std::optional<ForecastModel> model;
  std::optional<DcmTable> table;
  if (!a.model.empty()) model = load_model(a.model);
  if (!a.dcm.empty()) table = DcmTable::load(a.dcm);

  if (a.what == "regimes" || (all && model && table)) {
    if (!model || !table) throw InputError("diagnose regimes needs --model and --dcm");
    json regimes = json::array();
    std::ofstream csv_out(under(g, "regimes.csv"));
    csv_out << "dataset,pc6,regime\n";
    for (const auto& id : table->dataset_ids()) {
      auto r = classify_pc6(component_score(model->basis, table->primary(id), 5), a.tau);
      r.dataset = id;
      regimes.push_back(to_json(r));
      csv_out << csv::join({id, csv::format_double(r.score), regime_name(r.regime)}) << '\n';
    }
    doc["regimes"] = regimes;
  }

  std::optional<std::vector<PerformanceRecord>> records;
  if (!a.records.empty()) records = load_records(a.records);

  if (a.what == "variability" || (all && model && table && records)) {
    if (!model || !table || !records) throw InputError("diagnose variability needs --model, --dcm and --records");
    const auto v = offset_variability_ranking(*records, *table, model->basis, model->stage1);
    doc["variability"] = to_json(v);
    std::ofstream csv_out(under(g, "variability.csv"));
    csv_out << "rank,measure,association\n";
    int rank = 1;
    for (const auto& m : v.ranking)
      csv_out << csv::join({std::to_string(rank++), m.measure, csv::format_double(m.association)}) << '\n';
  }

  if (a.what == "anova" || (all && table && records)) {
    if (!table || !records) throw InputError("diagnose anova needs --dcm and --records");
    const auto t = anova_variance_depth(*records, *table, a.quantiles);
    doc["anova"] = to_json(t);
    std::ofstream csv_out(under(g, "anova.csv"));
    csv_out << "source,ss,df,f,p\n";
    for (const auto* s : {&t.a, &t.b, &t.interaction, &t.residual})
      csv_out << csv::join({s->name, csv::format_double(s->ss), csv::format_double(s->df),
                            std::isfinite(s->f) ? csv::format_double(s->f) : "",
                            std::isfinite(s->p) ? csv::format_double(s->p) : ""})
              << '\n';
  }

  if (all && table && table->dataset_ids().size() >= 3) {
    json guidance = json::array();
    std::vector<double> values;
    for (const auto& id : table->dataset_ids()) values.push_back(table->primary(id).variance_mean);
    for (const auto& id : table->dataset_ids()) {
      auto j = to_json(depth_guidance(table->primary(id).variance_mean, values));
      j["dataset"] = id;
      guidance.push_back(j);
    }
    doc["guidance"] = guidance;
  }
  write_json(g, under(g, "diagnostics.json"), doc);
  emit(g, doc);
  return 0;
}

struct GuideArgs {
  std::string dcm;
  std::string dataset;
  std::optional<double> value;
  std::string reference;
};

int cmd_guide(const Globals& g, const GuideArgs& a)
{
  const auto reference = DcmTable::load(a.reference.empty() ? a.dcm : a.reference);
  double value = 0.0;
  if (a.value) {
    value = *a.value;
  } else {
    if (a.dcm.empty() || a.dataset.empty()) throw InputError("guide needs --value, or --dcm with --dataset");
    value = DcmTable::load(a.dcm).primary(a.dataset).variance_mean;
  }
  std::vector<double> values;
  for (const auto& id : reference.dataset_ids())
    if (id != a.dataset) values.push_back(reference.primary(id).variance_mean);
  auto doc = to_json(depth_guidance(value, values));
  doc["command"] = "guide";
  if (!a.dataset.empty()) doc["dataset"] = a.dataset;
  std::cerr << "guide: variance_mean " << value << " -> " << doc["recommendation"].get<std::string>() << '\n';
  emit(g, doc);
  return 0;
}

// --- curve / synth -----------------------------------------------------------------

struct CurveArgs {
  std::string manifest;
  std::string dataset;
  std::string model;
  std::string records;
  std::vector<double> fractions = kDefaultCurveFractions;
  int seeds = 5;
};

int cmd_curve(const Globals& g, const CurveArgs& a)
{
  const auto manifest = load_manifest(a.manifest);
  const auto* entry = manifest.find(a.dataset);
  if (!entry) throw InputError("dataset '" + a.dataset + "' is not in the manifest");
  const auto model = load_model(a.model);
  const auto records = load_records(a.records);
  const auto table = load_dataset(*entry);
  CurveOptions options{a.fractions, a.seeds, g.seed, true};
  const auto rows = sample_size_curve(table, model, records, options);
  prepare_out_dir(g);
  write_curve_csv(rows, under(g, "curve_" + a.dataset + ".csv"));
  auto doc = curve_to_json(rows);
  write_json(g, under(g, "curve_" + a.dataset + ".json"), doc);
  for (const auto& p : summarize_curve(rows))
    std::cerr << "curve " << a.dataset << " fraction " << p.fraction << ": median mse " << p.median_mse << '\n';
  doc["command"] = "curve";
  emit(g, doc);
  return 0;
}

struct SynthArgs {
  std::string spec;
  std::string kind = "meta";
  bool with_dcm = false;
};

int cmd_synth(const Globals& g, const SynthArgs& a)
{
  json spec_doc = json::object();
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw InputError("cannot open spec '" + a.spec + "'");
    try {
      spec_doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError("spec '" + a.spec + "' does not parse: " + e.what());
    }
  }
  prepare_out_dir(g);
  json doc{{"command", "synth"}, {"kind", a.kind}, {"out_dir", g.out_dir.string()}};
  if (a.kind == "planted") {
    auto spec = planted_spec_from_json(spec_doc);
    if (!spec_doc.contains("seed")) spec.seed = g.seed;
    const auto table = generate_dataset(spec);
    const auto path = under(g, spec.dataset_id + ".csv");
    save_tabular(table, path);
    doc["spec"] = to_json(spec);
    doc["dataset"] = path.string();
    if (a.with_dcm) {
      DcmTable dcm;
      dcm.upsert(complexity::compute_all(table, spec.seed));
      dcm.save(under(g, "dcm.csv"));
    }
  } else if (a.kind == "meta") {
    auto spec = meta_spec_from_json(spec_doc);
    if (!spec_doc.contains("seed")) spec.seed = g.seed;
    const auto corpus = generate_meta_corpus(spec);
    write_meta_corpus(corpus, g.out_dir);
    doc["spec"] = to_json(spec);
    doc["datasets"] = corpus.datasets.size();
    doc["records"] = corpus.records.size();
    doc["difficulty"] = corpus.difficulty;
    if (a.with_dcm) {
      DcmTable dcm;
      for (const auto& t : corpus.datasets) dcm.upsert(complexity::compute_all(t, spec.seed));
      dcm.save(under(g, "dcm.csv"));
    }
  } else {
    throw InputError("--kind must be meta or planted");
  }
  write_json(g, under(g, "spec.json"), doc["spec"]);
  std::cerr << "synth: wrote " << a.kind << " corpus to " << g.out_dir << '\n';
  emit(g, doc);
  return 0;
}

void add_arch_flags(CLI::App* cmd, PredictArgs& a)
{
  cmd->add_option("--family", a.family, "LeNet, VGG or ResNet")->required();
  cmd->add_option("--depth", a.depth, "Weighted-layer count")->required();
  cmd->add_option("--filters", a.filters)->required();
  cmd->add_option("--dense", a.dense, "Dense units")->required();
  cmd->add_option("--dropout", a.dropout)->required();
  cmd->add_option("--lr", a.lr, "Learning rate")->required();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Pre-training accuracy forecasting from data complexity measures"};
  app.require_subcommand(1);
  Globals g;
  std::string out_dir = ".";
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for every written file")->capture_default_str();
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit timestamps for byte-identical output");
  app.add_option("--jobs", g.jobs, "Evaluate folds concurrently")->check(CLI::PositiveNumber);

  DcmArgs dcm;
  auto* c_dcm = app.add_subcommand("dcm", "Compute complexity measures into a DCM table");
  c_dcm->add_option("--manifest", dcm.manifest)->required();
  c_dcm->add_option("--dataset", dcm.datasets, "Dataset id (repeatable)");
  c_dcm->add_flag("--all", dcm.all, "Every manifest entry");
  c_dcm->add_option("--fraction", dcm.fraction, "Subsample fraction")->capture_default_str();
  c_dcm->add_flag("--unstratified", dcm.unstratified, "Plain random subsample");
  c_dcm->add_option("--out", dcm.out, "DCM CSV (rows are upserted)")->capture_default_str();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit basis, Stage 1 and Stage 2");
  c_fit->add_option("--records", fit.records)->required();
  c_fit->add_option("--dcm", fit.dcm)->required();
  c_fit->add_option("--model", fit.model, "Output model JSON")->capture_default_str();
  fit.training.attach(c_fit);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Forecast one architecture on one dataset");
  c_pred->add_option("--model", pred.model)->required();
  c_pred->add_option("--dcm", pred.dcm)->required();
  c_pred->add_option("--dataset", pred.dataset)->required();
  add_arch_flags(c_pred, pred);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Run an evaluation protocol");
  c_eval->add_option("--records", ev.records)->required();
  c_eval->add_option("--dcm", ev.dcm)->required();
  c_eval->add_option("--protocol", ev.protocol, "indist, lodo or lodm")->capture_default_str();
  c_eval->add_option("--manifest", ev.manifest, "Domain tags for lodm");
  c_eval->add_option("--test-fraction", ev.test_fraction, "indist held-out share")->capture_default_str();
  ev.training.attach(c_eval);

  EvalArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Two-stage against single-stage under LODO");
  c_ab->add_option("--records", ab.records)->required();
  c_ab->add_option("--dcm", ab.dcm)->required();
  ab.training.attach(c_ab);

  DiagnoseArgs dg;
  auto* c_dg = app.add_subcommand("diagnose", "PC6 fit, regimes, offset variability, ANOVA");
  c_dg->add_option("what", dg.what, "all, pc6, regimes, variability or anova")->capture_default_str();
  c_dg->add_option("--points", dg.points, "CSV with pc6,mse columns");
  c_dg->add_option("--model", dg.model);
  c_dg->add_option("--dcm", dg.dcm);
  c_dg->add_option("--records", dg.records);
  c_dg->add_option("--tau", dg.tau, "Regime threshold")->capture_default_str();
  c_dg->add_option("--quantiles", dg.quantiles, "variance_mean bins for the ANOVA")->capture_default_str();

  GuideArgs gd;
  auto* c_gd = app.add_subcommand("guide", "Depth recommendation from variance_mean");
  c_gd->add_option("--dcm", gd.dcm);
  c_gd->add_option("--dataset", gd.dataset);
  c_gd->add_option("--value", gd.value, "variance_mean to classify");
  c_gd->add_option("--reference", gd.reference, "DCM table of the training corpus (default: --dcm)");

  CurveArgs cv;
  auto* c_cv = app.add_subcommand("curve", "Forecast error against DCM sample size");
  c_cv->add_option("--manifest", cv.manifest)->required();
  c_cv->add_option("--dataset", cv.dataset)->required();
  c_cv->add_option("--model", cv.model, "Model fitted without this dataset")->required();
  c_cv->add_option("--records", cv.records)->required();
  c_cv->add_option("--fractions", cv.fractions)->delimiter(',');
  c_cv->add_option("--seeds", cv.seeds)->capture_default_str();

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a planted dataset or meta-corpus");
  c_sy->add_option("--spec", sy.spec, "Spec JSON (defaults apply to missing keys)");
  c_sy->add_option("--kind", sy.kind, "meta or planted")->capture_default_str();
  c_sy->add_flag("--with-dcm", sy.with_dcm, "Also compute dcm.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.out_dir = out_dir;

  try {
    if (c_dcm->parsed()) return cmd_dcm(g, dcm);
    if (c_fit->parsed()) return cmd_fit(g, fit);
    if (c_pred->parsed()) return cmd_predict(g, pred);
    if (c_eval->parsed()) return cmd_eval(g, ev);
    if (c_ab->parsed()) return cmd_ablate(g, ab);
    if (c_dg->parsed()) return cmd_diagnose(g, dg);
    if (c_gd->parsed()) return cmd_guide(g, gd);
    if (c_cv->parsed()) return cmd_curve(g, cv);
    if (c_sy->parsed()) return cmd_synth(g, sy);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
