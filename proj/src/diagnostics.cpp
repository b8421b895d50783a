#include "perfcast/diagnostics.hpp"

#include "perfcast/error.hpp"
#include "perfcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace perfcast {

using nlohmann::json;

QuadraticFit pc6_quadratic_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
  if (x.size() != y.size()) throw InputError("quadratic fit: x and y differ in length");
  if (x.size() < 3) throw InputError("quadratic fit: need at least 3 points");
  if (!x.allFinite() || !y.allFinite()) throw InputError("quadratic fit: non-finite input");
  if (std::set<double>(x.data(), x.data() + x.size()).size() < 3)
    throw InputError("quadratic fit: need at least 3 distinct x values");

  Eigen::MatrixXd design(x.size(), 3);
  design.col(0).setOnes();
  design.col(1) = x;
  design.col(2) = x.array().square().matrix();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw NumericError("quadratic fit: design matrix is rank deficient");
  const Eigen::Vector3d beta = qr.solve(y);

  QuadraticFit fit{beta(0), beta(1), beta(2), 0.0, std::size_t(x.size())};
  const double sse = (y - design * beta).squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  fit.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  return fit;
}

std::string regime_name(Regime r)
{
  switch (r) {
  case Regime::VarianceDominated: return "variance-dominated";
  case Regime::BiasDominated: return "bias-dominated";
  case Regime::Balanced: return "balanced";
  }
  return "?";
}

RegimeReport classify_pc6(double score, double tau)
{
  if (!(tau > 0.0)) throw InputError("regime threshold must be > 0");
  RegimeReport r;
  r.score = score;
  r.tau = tau;
  if (score > tau) {
    r.regime = Regime::VarianceDominated;
    r.recommendations = {"use stratified sampling for splits and subsets", "prefer noise-robust loss functions"};
  } else if (score < -tau) {
    r.regime = Regime::BiasDominated;
    r.recommendations = {"apply class re-weighting", "consider oversampling methods for minority classes"};
  } else {
    r.regime = Regime::Balanced;
    r.recommendations = {"no targeted preprocessing indicated"};
  }
  return r;
}

double component_score(const ComplexityBasis& basis, const ComplexityVector& vector, int component)
{
  if (component < 0 || component >= basis.rank)
    throw InputError("component " + std::to_string(component + 1) + " exceeds the basis rank " +
                     std::to_string(basis.rank));
  return basis.loadings.row(component).dot(basis.standardize(vector.values()));
}

VariabilityReport offset_variability_ranking(std::span<const PerformanceRecord> records, const DcmTable& table,
                                             const ComplexityBasis& basis, const BaselineModel& stage1)
{
  const auto ids = dataset_ids(records);
  if (ids.size() < 3) throw InputError("offset variability: need at least 3 datasets");

  VariabilityReport report;
  Eigen::VectorXd spread(Eigen::Index(ids.size()));
  Eigen::Matrix<double, Eigen::Dynamic, kMeasureCount> measures(Eigen::Index(ids.size()), kMeasureCount);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto& primary = table.primary(ids[k]);
    const double base = predict_baseline(stage1, project(basis, primary).scores);
    std::vector<double> offsets;
    for (const auto& r : records)
      if (r.dataset_id == ids[k]) offsets.push_back(r.accuracy - base);
    if (offsets.size() < 2) throw InputError("offset variability: dataset '" + ids[k] + "' has fewer than 2 configurations");
    const Eigen::Map<const Eigen::VectorXd> o(offsets.data(), Eigen::Index(offsets.size()));
    spread(Eigen::Index(k)) = std::sqrt((o.array() - o.mean()).square().sum() / double(o.size() - 1));
    measures.row(Eigen::Index(k)) = primary.values().transpose();
    report.offset_std.emplace_back(ids[k], spread(Eigen::Index(k)));
  }

  for (std::size_t j = 0; j < kMeasureCount; ++j) {
    const auto col = measures.col(Eigen::Index(j));
    MeasureAssociation m{std::string(kMeasureNames[j]), 0.0, (col.array() == col(0)).all()};
    if (!m.constant) m.association = stats::pearson(col, spread);
    report.ranking.push_back(m);
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const auto& l, const auto& r) {
    if (l.constant != r.constant) return r.constant;
    return std::abs(l.association) > std::abs(r.association);
  });
  return report;
}

namespace {

double rss(const Eigen::MatrixXd& design, const Eigen::VectorXd& y)
{
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  return (y - design * qr.solve(y)).squaredNorm();
}

std::vector<int> dense_levels(std::span<const int> v, std::vector<int>& distinct)
{
  distinct.assign(v.begin(), v.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> out;
  for (int x : v) out.push_back(int(std::lower_bound(distinct.begin(), distinct.end(), x) - distinct.begin()));
  return out;
}

} // namespace

AnovaTable two_way_anova(std::span<const int> a_raw, std::span<const int> b_raw, const Eigen::VectorXd& y,
                         const std::string& a_name, const std::string& b_name)
{
  const auto n = Eigen::Index(y.size());
  if (Eigen::Index(a_raw.size()) != n || Eigen::Index(b_raw.size()) != n)
    throw InputError("anova: factor and response lengths differ");
  if (!y.allFinite()) throw InputError("anova: non-finite response");
  std::vector<int> a_levels, b_levels;
  const auto a = dense_levels(a_raw, a_levels);
  const auto b = dense_levels(b_raw, b_levels);
  const auto la = Eigen::Index(a_levels.size()), lb = Eigen::Index(b_levels.size());
  if (la < 2 || lb < 2) throw InputError("anova: each factor needs at least 2 levels");

  std::vector<int> cell(std::size_t(la * lb), 0);
  for (Eigen::Index i = 0; i < n; ++i) ++cell[std::size_t(a[std::size_t(i)] * lb + b[std::size_t(i)])];
  for (Eigen::Index p = 0; p < la; ++p)
    for (Eigen::Index q = 0; q < lb; ++q)
      if (cell[std::size_t(p * lb + q)] == 0)
        throw InputError("anova: empty cell (" + a_name + "=" + std::to_string(a_levels[std::size_t(p)]) + ", " +
                         b_name + "=" + std::to_string(b_levels[std::size_t(q)]) + ")");
  const Eigen::Index df_res = n - la * lb;
  if (df_res <= 0) throw InputError("anova: no residual degrees of freedom (need replicates within cells)");

  // nested dummy-coded designs: 1 | A | B | A x B
  const Eigen::Index cols = 1 + (la - 1) + (lb - 1) + (la - 1) * (lb - 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int p = a[std::size_t(i)], q = b[std::size_t(i)];
    x(i, 0) = 1.0;
    if (p > 0) x(i, p) = 1.0;
    if (q > 0) x(i, la - 1 + q) = 1.0;
    if (p > 0 && q > 0) x(i, la + lb - 2 + (p - 1) * (lb - 1) + q) = 1.0;
  }
  const double rss0 = (y.array() - y.mean()).square().sum();
  const double rss_a = rss(x.leftCols(la), y);
  const double rss_ab = rss(x.leftCols(la + lb - 1), y);
  const double rss_full = rss(x, y);

  AnovaTable t;
  t.n = std::size_t(n);
  t.ss_total = rss0;
  auto clean = [&](double ss) { return ss < 1e-12 * rss0 ? 0.0 : ss; };
  t.a = {a_name, clean(rss0 - rss_a), double(la - 1)};
  t.b = {b_name, clean(rss_a - rss_ab), double(lb - 1)};
  t.interaction = {a_name + " x " + b_name, clean(rss_ab - rss_full), double((la - 1) * (lb - 1))};
  t.residual = {"residual", clean(rss_full), double(df_res), std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
  const double ms_res = t.residual.ss / t.residual.df;
  for (auto* s : {&t.a, &t.b, &t.interaction}) {
    const double ms = s->ss / s->df;
    if (ms == 0.0) {
      s->f = 0.0;
      s->p = 1.0;
    } else if (ms_res == 0.0) {
      s->f = std::numeric_limits<double>::infinity();
      s->p = 0.0;
    } else {
      s->f = ms / ms_res;
      s->p = stats::f_survival(s->f, s->df, t.residual.df);
    }
  }
  return t;
}

AnovaTable anova_variance_depth(std::span<const PerformanceRecord> records, const DcmTable& table, int quantiles)
{
  if (quantiles < 2) throw InputError("anova: need at least 2 quantile bins");
  if (records.empty()) throw InputError("anova: no records");
  std::vector<double> values;
  for (const auto& r : records) values.push_back(table.primary(r.dataset_id).variance_mean);
  std::vector<double> edges;
  for (int k = 1; k < quantiles; ++k) edges.push_back(stats::quantile(values, double(k) / quantiles));

  std::vector<int> bins, depths;
  Eigen::VectorXd y(Eigen::Index(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    bins.push_back(int(std::lower_bound(edges.begin(), edges.end(), values[i]) - edges.begin()));
    depths.push_back(records[i].arch.depth);
    y(Eigen::Index(i)) = records[i].accuracy;
  }
  return two_way_anova(bins, depths, y, "variance_mean_bin", "depth");
}

DepthGuidance depth_guidance(double variance_mean, std::span<const double> training_values)
{
  if (training_values.size() < 3) throw InputError("depth guidance: need variance_mean from at least 3 datasets");
  const std::vector<double> v(training_values.begin(), training_values.end());
  DepthGuidance g;
  g.value = variance_mean;
  g.lower = stats::quantile(v, 1.0 / 3.0);
  g.upper = stats::quantile(v, 2.0 / 3.0);
  if (variance_mean < g.lower) g.recommendation = "deep";
  else if (variance_mean > g.upper) g.recommendation = "shallow/medium";
  else g.recommendation = "no strong preference";
  g.rule = "variance_mean below the 1/3 quantile -> deep; above the 2/3 quantile -> shallow/medium; otherwise no "
           "strong preference";
  return g;
}

namespace {

json number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json source_json(const AnovaSource& s)
{
  return {{"source", s.name}, {"ss", s.ss}, {"df", s.df}, {"f", number_or_null(s.f)}, {"p", number_or_null(s.p)}};
}

} // namespace

json to_json(const QuadraticFit& f)
{
  return {{"a", f.a}, {"b", f.b}, {"c", f.c}, {"r2", f.r2}, {"points", f.points}};
}

json to_json(const RegimeReport& r)
{
  return {{"dataset", r.dataset},
          {"score", r.score},
          {"tau", r.tau},
          {"regime", regime_name(r.regime)},
          {"recommendations", r.recommendations}};
}

json to_json(const VariabilityReport& r)
{
  json spread = json::array();
  for (const auto& [id, s] : r.offset_std) spread.push_back({{"dataset", id}, {"offset_std", s}});
  json ranking = json::array();
  int rank = 1;
  for (const auto& m : r.ranking)
    ranking.push_back({{"rank", rank++}, {"measure", m.measure}, {"association", m.association}, {"constant", m.constant}});
  return {{"offset_std", spread}, {"ranking", ranking}};
}

json to_json(const AnovaTable& t)
{
  return {{"n", t.n},
          {"ss_total", t.ss_total},
          {"sources", {source_json(t.a), source_json(t.b), source_json(t.interaction), source_json(t.residual)}}};
}

json to_json(const DepthGuidance& g)
{
  return {{"value", g.value},
          {"lower_quantile", g.lower},
          {"upper_quantile", g.upper},
          {"recommendation", g.recommendation},
          {"rule", g.rule}};
}

} // namespace perfcast
