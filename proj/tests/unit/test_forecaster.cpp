#include "corpus.hpp"
#include "fixtures.hpp"

#include "perfcast/error.hpp"
#include "perfcast/forecaster.hpp"
#include "perfcast/log.hpp"
#include "perfcast/model_io.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace perfcast;

namespace {

double walk(const RegressionTree& t, const Eigen::VectorXd& x)
{
  int i = 0;
  while (t.nodes[std::size_t(i)].feature >= 0) {
    const auto& n = t.nodes[std::size_t(i)];
    i = x(n.feature) < n.threshold ? n.left : n.right;
  }
  return t.nodes[std::size_t(i)].value;
}

Eigen::MatrixXd gaussian(int n, int d, std::uint64_t seed)
{
  rnd::Engine rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rnd::normal(rng);
  return x;
}

Eigen::VectorXd smooth_target(const Eigen::MatrixXd& x, std::uint64_t seed)
{
  rnd::Engine rng(seed);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    y(i) = std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 1 % x.cols()) + 0.1 * rnd::normal(rng);
  return y;
}

ArchDescriptor arch(const std::string& family = "LeNet", int depth = 5, double lr = 0.001)
{
  return {family, depth, 16, 128, 0.25, lr};
}

// rows of an arbitrary stage-2 problem laid out by `schema`
Eigen::MatrixXd schema_rows(const FeatureSchema& schema, int n, std::uint64_t seed)
{
  const ArchGrid grid;
  const auto archs = grid.expand();
  rnd::Engine rng(seed);
  Eigen::MatrixXd out(n, schema.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s(schema.n_components);
    for (auto& v : s) v = rnd::normal(rng);
    out.row(i) = build_features(schema, s, archs[rnd::uniform_index(rng, archs.size())], rnd::uniform01(rng)).transpose();
  }
  return out;
}

struct CaptureWarnings {
  std::vector<std::string> messages;
  WarningSink previous;
  CaptureWarnings() { previous = set_warning_sink([this](const std::string& m) { messages.push_back(m); }); }
  ~CaptureWarnings() { set_warning_sink(previous); }
};

} // namespace

TEST_CASE("cart recovers a step")
{
  Eigen::MatrixXd x(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = i;
    y(i) = i <= 12 ? 1.0 : 4.0;
  }
  const auto t = fit_cart(x, y, Eigen::VectorXd::Ones(20), CartOptions{1, 1, 0});
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold == 12.5);
  CHECK(t.predict(Eigen::VectorXd::Constant(1, 3.0)) == 1.0);
  CHECK(t.predict(Eigen::VectorXd::Constant(1, 18.0)) == 4.0);
  CHECK(t.depth() == 1);
  CHECK(t.leaf_count() == 2);
}

TEST_CASE("cart respects depth, leaf weight and weights")
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = gaussian(80, 3, seed);
    const auto y = smooth_target(x, seed);
    const CartOptions opt{int(1 + seed % 4), double(1 + seed % 5), 0};
    const auto t = fit_cart(x, y, Eigen::VectorXd::Ones(80), opt);
    CAPTURE(seed);
    t.validate(3);
    CHECK(t.depth() <= opt.max_depth);

    std::map<int, int> counts;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int node = 0;
      while (!t.nodes[std::size_t(node)].is_leaf())
        node = x(i, t.nodes[std::size_t(node)].feature) < t.nodes[std::size_t(node)].threshold
                   ? t.nodes[std::size_t(node)].left
                   : t.nodes[std::size_t(node)].right;
      ++counts[node];
    }
    for (const auto& [leaf, c] : counts) CHECK(c >= opt.min_leaf);

    // zero weight drops a row; weight two duplicates it
    Eigen::VectorXd w = Eigen::VectorXd::Ones(80);
    w.head(10).setZero();
    w(20) = 2;
    Eigen::MatrixXd xs(71, 3);
    Eigen::VectorXd ys(71);
    xs.topRows(70) = x.bottomRows(70);
    ys.head(70) = y.tail(70);
    xs.row(70) = x.row(20);
    ys(70) = y(20);
    const auto a = fit_cart(x, y, w, opt), b = fit_cart(xs, ys, Eigen::VectorXd::Ones(71), opt);
    for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(a.predict(x.row(i).transpose()) == doctest::Approx(b.predict(x.row(i).transpose())).epsilon(1e-12));
  }
}

TEST_CASE("trees are piecewise constant")
{
  const auto x = gaussian(200, 2, 9);
  const auto t = fit_cart(x, smooth_target(x, 9), Eigen::VectorXd::Ones(200), CartOptions{4, 2, 0});
  std::vector<double> cuts;
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && n.feature == 0) cuts.push_back(n.threshold);
  std::sort(cuts.begin(), cuts.end());
  REQUIRE(!cuts.empty());
  for (double c : cuts) {
    // both sides of a cut, nudged but not across a neighbouring cut
    for (double side : {-1e-9, 1e-9}) {
      Eigen::VectorXd p(2);
      p << c + side, 0.3;
      Eigen::VectorXd q = p;
      q(0) += side;
      CHECK(t.predict(p) == t.predict(q));
    }
    Eigen::VectorXd at(2), below(2);
    at << c, 0.3;
    below << std::nextafter(c, -1e9), 0.3;
    CHECK(t.predict(at) == walk(t, at));
    CHECK(t.predict(below) == walk(t, below));
  }
}

TEST_CASE("constant targets give a single leaf")
{
  const auto x = gaussian(30, 2, 1);
  const auto t = fit_cart(x, Eigen::VectorXd::Constant(30, 0.7), Eigen::VectorXd::Ones(30), CartOptions{});
  CHECK(t.nodes.size() == 1);
  CHECK(t.nodes[0].value == 0.7);
}

TEST_CASE("tree validation")
{
  RegressionTree t;
  t.nodes = {TreeNode{0, 0.5, 1, 2, 0}, TreeNode{-1, 0, -1, -1, 1.0}, TreeNode{-1, 0, -1, -1, 2.0}};
  CHECK_NOTHROW(t.validate(1));
  CHECK_THROWS_AS(t.validate(0), InputError);
  auto dangling = t;
  dangling.nodes[0].right = 7;
  CHECK_THROWS_AS(dangling.validate(1), InputError);
  auto cyclic = t;
  cyclic.nodes[0].left = 0;
  CHECK_THROWS_AS(cyclic.validate(1), InputError);
  auto nan = t;
  nan.nodes[2].value = std::nan("");
  CHECK_THROWS_AS(nan.validate(1), InputError);
  CHECK_THROWS_AS(RegressionTree{}.validate(1), InputError);
}

TEST_CASE("stage 1 ols")
{
  SUBCASE("noise-free recovery")
  {
    Eigen::MatrixXd s(6, 1);
    s << -2, -1, 0, 0.5, 1, 3;
    const Eigen::VectorXd acc = (0.5 + 0.1 * s.col(0).array()).matrix();
    const auto m = fit_stage1(s, acc);
    CHECK(std::abs(m.intercept - 0.5) < 1e-9);
    CHECK(std::abs(m.coefficients(0) - 0.1) < 1e-9);
    CHECK(m.residual_std < 1e-9);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(predict_baseline(m, s.row(i).transpose()) == doctest::Approx(acc(i)));
  }

  SUBCASE("three datasets, two components, solved by hand")
  {
    Eigen::MatrixXd s(3, 2);
    s << 0, 0, 1, 0, 0, 1;
    const Eigen::Vector3d acc(0.5, 0.7, 0.4);
    const auto m = fit_stage1(s, acc);
    CHECK(m.intercept == doctest::Approx(0.5));
    CHECK(m.coefficients(0) == doctest::Approx(0.2));
    CHECK(m.coefficients(1) == doctest::Approx(-0.1));
  }

  SUBCASE("residuals are orthogonal to the regressors")
  {
    const auto s = gaussian(12, 3, 4);
    rnd::Engine rng(4);
    Eigen::VectorXd acc(12);
    for (auto& a : acc) a = 0.5 + 0.2 * rnd::uniform01(rng);
    const auto m = fit_stage1(s, acc);
    Eigen::VectorXd r(12);
    for (Eigen::Index i = 0; i < 12; ++i) r(i) = acc(i) - predict_baseline(m, s.row(i).transpose());
    CHECK(std::abs(r.sum()) < 1e-12);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(r.dot(s.col(j))) < 1e-6 * r.norm() * s.col(j).norm());
    CHECK(m.residual_std == doctest::Approx(std::sqrt(r.squaredNorm() / (12 - 3 - 1))));

    const Eigen::VectorXd q = Eigen::Vector3d(0.3, -1, 2);
    CHECK(predict_baseline(m, q) == doctest::Approx(m.intercept + m.coefficients.dot(q)));
    CHECK(predict_baseline(m, Eigen::VectorXd::Zero(3)) == m.intercept);
  }

  SUBCASE("collinear regressors")
  {
    Eigen::MatrixXd s(5, 2);
    s << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    try {
      fit_stage1(s, Eigen::VectorXd::LinSpaced(5, 0.5, 0.9));
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("ridge") != std::string::npos);
    }
    CHECK_NOTHROW(fit_stage1(s, Eigen::VectorXd::LinSpaced(5, 0.5, 0.9), BaselineMethod::Ridge, 0.1));
  }

  SUBCASE("too few datasets switch to ridge")
  {
    CaptureWarnings w;
    const auto m = fit_stage1(gaussian(3, 3, 2), Eigen::Vector3d(0.5, 0.6, 0.7));
    CHECK(m.method == BaselineMethod::Ridge);
    CHECK(w.messages.size() == 1);
  }
}

TEST_CASE("stage 1 ridge")
{
  const auto s = gaussian(10, 2, 7);
  const Eigen::VectorXd acc = (0.6 + 0.05 * s.col(0).array() - 0.02 * s.col(1).array()).matrix();
  const auto ols = fit_stage1(s, acc);
  const auto tiny = fit_stage1(s, acc, BaselineMethod::Ridge, 1e-10);
  CHECK(std::abs(tiny.intercept - ols.intercept) < 1e-6);
  CHECK((tiny.coefficients - ols.coefficients).cwiseAbs().maxCoeff() < 1e-6);

  // the intercept is never shrunk
  const auto huge = fit_stage1(s, acc, BaselineMethod::Ridge, 1e12);
  CHECK(huge.coefficients.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(huge.intercept == doctest::Approx(acc.mean()));
  CHECK_THROWS_AS(fit_stage1(s, acc, BaselineMethod::Ridge, -1), InputError);
}

TEST_CASE("feature layout")
{
  FeatureSchema schema{2};
  CHECK(schema.size() == 2 + int(known_families().size()) + 6);
  const auto names = schema.names();
  CHECK(names.size() == std::size_t(schema.size()));
  CHECK(names.front() == "pc1");
  CHECK(names.back() == "baseline");

  const auto f = build_features(schema, Eigen::Vector2d(0.1, -0.2), {"LeNet", 5, 8, 64, 0.0, 0.001}, 0.8);
  const int k = int(known_families().size());
  CHECK(f(0) == 0.1);
  CHECK(f(1) == -0.2);
  CHECK(f(2) == 1.0);
  for (int j = 1; j < k; ++j) CHECK(f(2 + j) == 0.0);
  CHECK(f(2 + k) == 5);
  CHECK(f(3 + k) == 8);
  CHECK(f(4 + k) == 64);
  CHECK(f(5 + k) == 0.0);
  CHECK(f(6 + k) == doctest::Approx(-3.0));
  CHECK(f(7 + k) == 0.8);
  CHECK(f == build_features(schema, Eigen::Vector2d(0.1, -0.2), {"LeNet", 5, 8, 64, 0.0, 0.001}, 0.8));

  FeatureSchema single{2};
  single.include_baseline = false;
  CHECK(single.size() == schema.size() - 1);
  CHECK(build_features(single, Eigen::Vector2d(0, 0), arch(), 0.8).size() == single.size());

  CHECK_THROWS_AS(build_features(schema, Eigen::Vector2d(0, 0), arch("Transformer"), 0.5), InputError);
  CHECK_THROWS_AS(build_features(schema, Eigen::Vector3d(0, 0, 0), arch(), 0.5), InputError);
  FeatureSchema narrow{2, {"LeNet", "VGG"}};
  CHECK_THROWS_AS(build_features(narrow, Eigen::Vector2d(0, 0), arch("ResNet", 18), 0.5), InputError);
}

TEST_CASE("offset model prediction")
{
  OffsetModel m;
  m.schema = FeatureSchema{1};
  m.initial = 0.25;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(m.schema.size());
  CHECK(predict_offset(m, x) == 0.25);

  m.trees.push_back(RegressionTree::leaf(0.4));
  m.weights.push_back(0.05);
  CHECK(predict_offset(m, x) == doctest::Approx(0.25 + 0.05 * 0.4));
  CHECK_THROWS_AS(predict_offset(m, Eigen::VectorXd::Zero(3)), InputError);

  // fitted ensemble against an independent walk
  const FeatureSchema schema{3};
  const auto rows = schema_rows(schema, 60, 3);
  const auto y = smooth_target(rows, 3);
  for (auto kind : {EnsembleKind::GradientBoosted, EnsembleKind::RandomForest}) {
    OffsetParams p;
    p.kind = kind;
    p.estimators = 25;
    const auto fit = fit_stage2(schema, rows, y, p);
    const auto probe = schema_rows(schema, 20, 4);
    for (Eigen::Index i = 0; i < probe.rows(); ++i) {
      double want = fit.initial;
      for (std::size_t t = 0; t < fit.trees.size(); ++t) want += fit.weights[t] * walk(fit.trees[t], probe.row(i).transpose());
      CHECK(predict_offset(fit, probe.row(i).transpose()) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("combining base and offset")
{
  auto f = combine(0.9, 0.05);
  CHECK(f.final_accuracy == doctest::Approx(0.95));
  CHECK_FALSE(f.clamped);
  f = combine(0.98, 0.07);
  CHECK(f.final_accuracy == 1.0);
  CHECK(f.clamped);
  f = combine(0.6, -0.02);
  CHECK(f.final_accuracy == doctest::Approx(0.58));
  CHECK(f.base == 0.6);
  CHECK(f.offset == -0.02);
  f = combine(0.01, -0.3);
  CHECK(f.final_accuracy == 0.0);
  CHECK(f.clamped);
}

TEST_CASE("stage 2 learners")
{
  const FeatureSchema schema{2};

  SUBCASE("defaults and ranges")
  {
    const auto gb = OffsetParams{}.resolved();
    CHECK(gb.estimators == 300);
    CHECK(gb.max_depth == 3);
    CHECK(gb.learning_rate == 0.05);
    CHECK(gb.min_leaf == 2);
    OffsetParams rf;
    rf.kind = EnsembleKind::RandomForest;
    CHECK(rf.resolved().estimators == 200);
    CHECK(rf.resolved().max_depth == 8);
    OffsetParams bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(bad.resolved(), InputError);
    bad = {};
    bad.min_leaf = 0.5;
    CHECK_THROWS_AS(bad.resolved(), InputError);
    bad = {};
    bad.max_depth = -1;
    CHECK_THROWS_AS(bad.resolved(), InputError);
  }

  SUBCASE("constant offsets")
  {
    const auto rows = schema_rows(schema, 40, 1);
    const auto m = fit_stage2(schema, rows, Eigen::VectorXd::Constant(40, -0.03), OffsetParams{});
    CHECK(m.trees.size() == 300);
    for (const auto& t : m.trees)
      for (const auto& n : t.nodes)
        if (n.is_leaf()) CHECK(n.value == 0.0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) CHECK(predict_offset(m, rows.row(i).transpose()) == -0.03);
  }

  SUBCASE("boosting never raises the training error")
  {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto rows = schema_rows(schema, 80, seed);
      const auto m = fit_stage2(schema, rows, smooth_target(rows, seed), OffsetParams{});
      REQUIRE(m.training_mse.size() == 300);
      for (std::size_t r = 1; r < m.training_mse.size(); ++r) CHECK(m.training_mse[r] <= m.training_mse[r - 1]);
      CHECK(m.training_mse.back() < m.training_mse.front());
    }
  }

  SUBCASE("forests: size, weights and seeds")
  {
    const auto rows = schema_rows(schema, 50, 2);
    const auto y = smooth_target(rows, 2);
    OffsetParams p;
    p.kind = EnsembleKind::RandomForest;
    p.seed = 5;
    const auto a = fit_stage2(schema, rows, y, p), b = fit_stage2(schema, rows, y, p);
    CHECK(a.trees.size() == 200);
    CHECK(a.weights.front() == 1.0 / 200);
    for (const auto& t : a.trees) CHECK(t.depth() <= 8);
    p.seed = 6;
    const auto c = fit_stage2(schema, rows, y, p);
    bool differs = false;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const Eigen::VectorXd x = rows.row(i).transpose();
      CHECK(predict_offset(a, x) == predict_offset(b, x));
      differs = differs || predict_offset(a, x) != predict_offset(c, x);
    }
    CHECK(differs);
  }

  SUBCASE("row order does not matter")
  {
    const auto rows = schema_rows(schema, 45, 3);
    const auto y = smooth_target(rows, 3);
    Eigen::MatrixXd rr = rows.colwise().reverse();
    Eigen::VectorXd yr = y.reverse();
    for (auto kind : {EnsembleKind::GradientBoosted, EnsembleKind::RandomForest}) {
      OffsetParams p;
      p.kind = kind;
      p.estimators = 40;
      const auto a = fit_stage2(schema, rows, y, p), b = fit_stage2(schema, rr, yr, p);
      for (Eigen::Index i = 0; i < rows.rows(); ++i)
        CHECK(predict_offset(a, rows.row(i).transpose()) == predict_offset(b, rows.row(i).transpose()));
    }
  }

  SUBCASE("input checks")
  {
    const auto rows = schema_rows(schema, 9, 1);
    CHECK_THROWS_AS(fit_stage2(schema, rows, Eigen::VectorXd::Zero(9), OffsetParams{}), InputError);
    const auto more = schema_rows(schema, 12, 1);
    CHECK_THROWS_AS(fit_stage2(schema, more, Eigen::VectorXd::Zero(11), OffsetParams{}), InputError);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(12);
    bad(3) = std::nan("");
    CHECK_THROWS_AS(fit_stage2(schema, more, bad, OffsetParams{}), InputError);
    CHECK_THROWS_AS(fit_single_stage(schema, more, Eigen::VectorXd::Zero(12), OffsetParams{}), InputError);

    CaptureWarnings w;
    Eigen::MatrixXd same = more.row(0).replicate(12, 1);
    OffsetParams p;
    p.estimators = 5;
    const auto m = fit_stage2(schema, same, Eigen::VectorXd::LinSpaced(12, 0, 1), p);
    CHECK(w.messages.size() == 1);
    CHECK(predict_offset(m, same.row(0).transpose()) == doctest::Approx(0.5));
  }

  SUBCASE("single stage")
  {
    FeatureSchema single{2};
    single.include_baseline = false;
    const auto rows = schema_rows(single, 30, 8);
    const auto m = fit_single_stage(single, rows, Eigen::VectorXd::Constant(30, 0.81), OffsetParams{});
    CHECK(predict_offset(m, rows.row(4).transpose()) == 0.81);
  }
}

TEST_CASE("end to end on a meta-corpus")
{
  const auto corpus = generate_meta_corpus(fixtures::small_corpus_spec());
  const auto table = fixtures::dcm_table(corpus, 2);
  TrainingOptions opt;
  opt.stage2.estimators = 60;
  const auto model = fit_forecast_model(table, corpus.records, opt);

  CHECK(model.selection.has_value());
  CHECK(model.basis.n_components == model.selection->selected);
  CHECK(model.basis.fitted_ids.size() == 7);
  CHECK(model.stage1.fitted_ids.size() == 7);
  CHECK(model.stage2.fitted_ids.size() == corpus.records.size());
  CHECK(model.stage2.trees.size() == 60);

  SUBCASE("offsets decouple exactly")
  {
    std::map<std::string, ComplexityVector> primary;
    for (const auto& id : table.dataset_ids()) primary[id] = table.primary(id);
    const auto data = stage2_data(model.basis, model.stage1, model.stage2.schema, primary, corpus.records);
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      const auto r = Eigen::Index(i);
      CHECK(data.accuracy(r) == corpus.records[i].accuracy);
      CHECK(data.offset(r) == data.accuracy(r) - data.base(r));
      CHECK(std::abs(data.offset(r) + data.base(r) - data.accuracy(r)) <= 1e-15);
      CHECK(data.features(r, model.stage2.schema.size() - 1) == data.base(r));
    }
    const auto means = mean_accuracy(corpus.records, table.dataset_ids());
    CHECK(means.size() == 7);
  }

  SUBCASE("forecasts use both stages and stay in range")
  {
    for (std::size_t i = 0; i < corpus.records.size(); i += 37) {
      const auto& rec = corpus.records[i];
      const auto f = model.forecast(table.primary(rec.dataset_id), rec.arch);
      CHECK(f.final_accuracy >= 0.0);
      CHECK(f.final_accuracy <= 1.0);
      CHECK(std::abs(f.final_accuracy - rec.accuracy) < 0.1);
    }
  }

  SUBCASE("json round trip is bit-identical")
  {
    fixtures::TempDir dir;
    save_model(model, dir / "model.json");
    const auto back = load_model(dir / "model.json");
    CHECK(back.stage2.trees.size() == model.stage2.trees.size());
    CHECK(back.basis.n_components == model.basis.n_components);
    CHECK(back.stage2.schema == model.stage2.schema);
    for (const auto& rec : corpus.records) {
      const auto a = model.forecast(table.primary(rec.dataset_id), rec.arch);
      const auto b = back.forecast(table.primary(rec.dataset_id), rec.arch);
      CHECK(a.base == b.base);
      CHECK(a.offset == b.offset);
      CHECK(a.final_accuracy == b.final_accuracy);
    }
    CHECK(model_to_json(back) == model_to_json(model));

    const auto text = fixtures::slurp(dir / "model.json");
    dir.write("truncated.json", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_model(dir / "truncated.json"), InputError);
    auto doc = model_to_json(model);
    doc["version"] = kModelVersion + 1;
    CHECK_THROWS_AS(model_from_json(doc), InputError);
    doc = model_to_json(model);
    doc["stage2"]["trees"][0][0][2] = 9999;
    CHECK_THROWS_AS(model_from_json(doc), InputError);
    doc = model_to_json(model);
    doc.erase("basis");
    CHECK_THROWS_AS(model_from_json(doc), InputError);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), InputError);
  }

  SUBCASE("a 300-tree model survives the round trip")
  {
    TrainingOptions full;
    full.n_components = 2;
    const auto big = fit_forecast_model(table, corpus.records, full);
    CHECK_FALSE(big.selection.has_value());
    const auto back = model_from_json(nlohmann::json::parse(model_to_json(big).dump()));
    CHECK(back.stage2.trees.size() == 300);
    const auto& rec = corpus.records[5];
    CHECK(back.forecast(table.primary(rec.dataset_id), rec.arch).final_accuracy ==
          big.forecast(table.primary(rec.dataset_id), rec.arch).final_accuracy);
  }

  SUBCASE("missing complexity rows are named")
  {
    auto records = corpus.records;
    records[0].dataset_id = "ghost";
    try {
      fit_forecast_model(table, records, opt);
      FAIL("expected an input error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
}
