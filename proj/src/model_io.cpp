#include "perfcast/model_io.hpp"

#include "perfcast/error.hpp"

#include <fstream>

namespace perfcast {

using nlohmann::json;

namespace {

template <class Vec>
json vec_json(const Vec& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vec_from(const json& j, Eigen::Index expected = -1)
{
  const auto v = j.get<std::vector<double>>();
  if (expected >= 0 && Eigen::Index(v.size()) != expected)
    throw InputError("model: expected " + std::to_string(expected) + " values, got " + std::to_string(v.size()));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

json basis_json(const ComplexityBasis& b)
{
  json transforms = json::array();
  for (auto t : b.transforms) transforms.push_back(t == MeasureTransform::Log1p ? "log1p" : "identity");
  json loadings = json::array();
  for (Eigen::Index r = 0; r < b.loadings.rows(); ++r) loadings.push_back(vec_json(b.loadings.row(r)));
  return {{"measures", kMeasureNames},
          {"transforms", transforms},
          {"mean", vec_json(b.mean)},
          {"std", vec_json(b.std)},
          {"active", b.active},
          {"loadings", loadings},
          {"eigenvalues", vec_json(b.eigenvalues)},
          {"explained_ratio", vec_json(b.explained_ratio)},
          {"rank", b.rank},
          {"n_components", b.n_components},
          {"fitted_ids", b.fitted_ids}};
}

ComplexityBasis basis_from(const json& j)
{
  ComplexityBasis b;
  if (j.at("measures").get<std::vector<std::string>>() != std::vector<std::string>(kMeasureNames.begin(), kMeasureNames.end()))
    throw InputError("model: basis measure list does not match this build");
  const auto transforms = j.at("transforms").get<std::vector<std::string>>();
  if (transforms.size() != kMeasureCount) throw InputError("model: basis transform count");
  for (std::size_t k = 0; k < kMeasureCount; ++k) {
    if (transforms[k] == "log1p") b.transforms[k] = MeasureTransform::Log1p;
    else if (transforms[k] == "identity") b.transforms[k] = MeasureTransform::Identity;
    else throw InputError("model: unknown transform '" + transforms[k] + "'");
  }
  const auto n = Eigen::Index(kMeasureCount);
  b.mean = vec_from(j.at("mean"), n);
  b.std = vec_from(j.at("std"), n);
  b.active = j.at("active").get<std::array<bool, kMeasureCount>>();
  const auto& rows = j.at("loadings");
  if (rows.size() != kMeasureCount) throw InputError("model: loadings must have 14 rows");
  for (Eigen::Index r = 0; r < n; ++r) b.loadings.row(r) = vec_from(rows.at(std::size_t(r)), n).transpose();
  b.eigenvalues = vec_from(j.at("eigenvalues"), n);
  b.explained_ratio = vec_from(j.at("explained_ratio"), n);
  b.rank = j.at("rank").get<int>();
  b.n_components = j.at("n_components").get<int>();
  if (b.n_components < 1 || b.n_components > b.rank || b.rank > int(kMeasureCount))
    throw InputError("model: inconsistent basis rank / component count");
  if ((b.std.array() <= 0.0).any()) throw InputError("model: basis std must be positive");
  b.fitted_ids = j.at("fitted_ids").get<std::set<std::string>>();
  return b;
}

json stage1_json(const BaselineModel& m)
{
  return {{"method", m.method == BaselineMethod::Ols ? "ols" : "ridge"},
          {"lambda", m.lambda},
          {"intercept", m.intercept},
          {"coefficients", vec_json(m.coefficients)},
          {"residual_std", m.residual_std},
          {"fitted_ids", m.fitted_ids}};
}

BaselineModel stage1_from(const json& j)
{
  BaselineModel m;
  const auto method = j.at("method").get<std::string>();
  if (method == "ols") m.method = BaselineMethod::Ols;
  else if (method == "ridge") m.method = BaselineMethod::Ridge;
  else throw InputError("model: unknown stage-1 method '" + method + "'");
  m.lambda = j.at("lambda").get<double>();
  m.intercept = j.at("intercept").get<double>();
  m.coefficients = vec_from(j.at("coefficients"));
  m.residual_std = j.at("residual_std").get<double>();
  m.fitted_ids = j.at("fitted_ids").get<std::set<std::string>>();
  return m;
}

json schema_json(const FeatureSchema& s)
{
  return {{"n_components", s.n_components},
          {"families", s.families},
          {"include_baseline", s.include_baseline},
          {"names", s.names()}};
}

FeatureSchema schema_from(const json& j)
{
  FeatureSchema s;
  s.n_components = j.at("n_components").get<int>();
  s.families = j.at("families").get<std::vector<std::string>>();
  s.include_baseline = j.at("include_baseline").get<bool>();
  if (s.n_components < 0 || s.families.empty()) throw InputError("model: malformed feature schema");
  if (j.contains("names") && j.at("names").get<std::vector<std::string>>() != s.names())
    throw InputError("model: feature names do not match the schema layout");
  return s;
}

json stage2_json(const OffsetModel& m)
{
  json trees = json::array();
  for (const auto& t : m.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    trees.push_back(nodes);
  }
  return {{"kind", kind_name(m.kind)},
          {"initial", m.initial},
          {"params", params_to_json(m.params)},
          {"weights", m.weights},
          {"node_layout", {"feature", "threshold", "left", "right", "value"}},
          {"trees", trees},
          {"fitted_ids", m.fitted_ids}};
}

OffsetModel stage2_from(const json& j, const FeatureSchema& schema)
{
  OffsetModel m;
  m.kind = parse_kind(j.at("kind").get<std::string>());
  m.initial = j.at("initial").get<double>();
  const auto& p = j.at("params");
  m.params.kind = m.kind;
  m.params.estimators = p.at("estimators").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.learning_rate = p.at("learning_rate").get<double>();
  m.params.min_leaf = p.at("min_leaf").get<double>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& tree : j.at("trees")) {
    RegressionTree t;
    for (const auto& n : tree) {
      if (n.size() != 5) throw InputError("model: tree node must have 5 fields");
      t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>()});
    }
    t.validate(schema.size());
    m.trees.push_back(std::move(t));
  }
  if (m.trees.size() != m.weights.size()) throw InputError("model: tree and weight counts differ");
  if (int(m.trees.size()) != m.params.estimators) throw InputError("model: tree count differs from the configured count");
  m.schema = schema;
  m.fitted_ids = j.at("fitted_ids").get<std::set<std::string>>();
  return m;
}

} // namespace

std::string kind_name(EnsembleKind kind)
{
  return kind == EnsembleKind::GradientBoosted ? "gbt" : "rf";
}

EnsembleKind parse_kind(const std::string& name)
{
  if (name == "gbt") return EnsembleKind::GradientBoosted;
  if (name == "rf") return EnsembleKind::RandomForest;
  throw InputError("unknown stage-2 kind '" + name + "' (expected gbt or rf)");
}

json params_to_json(const OffsetParams& params)
{
  const auto p = params.resolved();
  return {{"kind", kind_name(p.kind)},
          {"estimators", p.estimators},
          {"max_depth", p.max_depth},
          {"learning_rate", p.learning_rate},
          {"min_leaf", p.min_leaf},
          {"seed", p.seed}};
}

json model_to_json(const ForecastModel& model)
{
  return {{"version", kModelVersion},
          {"basis", basis_json(model.basis)},
          {"stage1", stage1_json(model.stage1)},
          {"stage2", stage2_json(model.stage2)},
          {"feature_schema", schema_json(model.stage2.schema)}};
}

ForecastModel model_from_json(const json& doc)
{
  try {
    if (!doc.is_object() || !doc.contains("version")) throw InputError("model: missing version");
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion)
      throw InputError("model: version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelVersion) + ")");
    ForecastModel m;
    m.basis = basis_from(doc.at("basis"));
    m.stage1 = stage1_from(doc.at("stage1"));
    const auto schema = schema_from(doc.at("feature_schema"));
    m.stage2 = stage2_from(doc.at("stage2"), schema);
    if (m.stage1.coefficients.size() != m.basis.n_components || schema.n_components != m.basis.n_components)
      throw InputError("model: stage-1, schema and basis disagree on the component count");
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const ForecastModel& model, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

ForecastModel load_model(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("model '" + path.string() + "' does not parse: " + e.what());
  }
  return model_from_json(doc);
}

} // namespace perfcast
