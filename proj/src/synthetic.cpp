#include "perfcast/synthetic.hpp"

#include "perfcast/error.hpp"
#include "perfcast/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace perfcast {

using nlohmann::json;

void validate(const PlantedSpec& s)
{
  if (s.n < 4 || s.d < 1 || s.classes < 2) throw InputError("planted spec: need n >= 4, d >= 1, classes >= 2");
  const int k = s.intrinsic_dim == 0 ? s.d : s.intrinsic_dim;
  if (k < 1 || k > s.d) throw InputError("planted spec: intrinsic dimension must lie in [1, d]");
  if (!(s.separation >= 0.0) || !std::isfinite(s.separation)) throw InputError("planted spec: separation must be >= 0");
  if (!s.proportions.empty()) {
    if (int(s.proportions.size()) != s.classes) throw InputError("planted spec: one proportion per class required");
    double sum = 0.0;
    for (double p : s.proportions) {
      if (!(p > 0.0)) throw InputError("planted spec: proportions must be positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("planted spec: proportions must sum to 1");
  }
  if (s.nonlinearity != Nonlinearity::None && s.classes != 2)
    throw InputError("planted spec: xor and ring modes are two-class");
  if (s.nonlinearity == Nonlinearity::Xor && k < 2) throw InputError("planted spec: xor needs intrinsic dimension >= 2");
}

namespace {

std::vector<int> class_counts(const PlantedSpec& s)
{
  std::vector<double> p = s.proportions;
  if (p.empty()) p.assign(std::size_t(s.classes), 1.0 / s.classes);
  std::vector<int> counts(p.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  int used = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double quota = s.n * p[c];
    counts[c] = int(std::floor(quota));
    used += counts[c];
    remainder.emplace_back(quota - counts[c], c);
  }
  std::stable_sort(remainder.begin(), remainder.end(), [](auto a, auto b) { return a.first > b.first; });
  for (int i = 0; used < s.n; ++i, ++used) ++counts[remainder[std::size_t(i)].second];
  for (int c : counts)
    if (c < 2) throw InputError("planted spec: every class needs at least 2 rows");
  return counts;
}

Eigen::MatrixXd class_centres(int classes, int k, double sep)
{
  Eigen::MatrixXd centres = Eigen::MatrixXd::Zero(classes, k);
  if (classes <= k) {
    // simplex corners: pairwise distance sep
    for (int c = 0; c < classes; ++c) centres(c, c) = sep / std::numbers::sqrt2;
  } else if (k == 1) {
    for (int c = 0; c < classes; ++c) centres(c, 0) = c * sep;
  } else {
    // regular polygon with neighbouring distance sep
    const double r = sep / (2.0 * std::sin(std::numbers::pi / classes));
    for (int c = 0; c < classes; ++c) {
      centres(c, 0) = r * std::cos(2.0 * std::numbers::pi * c / classes);
      centres(c, 1) = r * std::sin(2.0 * std::numbers::pi * c / classes);
    }
  }
  return centres;
}

} // namespace

DatasetTable generate_dataset(const PlantedSpec& spec)
{
  validate(spec);
  const int k = spec.intrinsic_dim == 0 ? spec.d : spec.intrinsic_dim;
  rnd::Engine rng(spec.seed);
  Eigen::MatrixXd z(spec.n, k);
  std::vector<int> labels(std::size_t(spec.n));

  if (spec.nonlinearity == Nonlinearity::None) {
    const auto counts = class_counts(spec);
    std::size_t i = 0;
    for (int c = 0; c < spec.classes; ++c)
      for (int r = 0; r < counts[std::size_t(c)]; ++r) labels[i++] = c;
    rnd::shuffle(labels.begin(), labels.end(), rng);
    const Eigen::MatrixXd centres = class_centres(spec.classes, k, spec.separation);
    for (int r = 0; r < spec.n; ++r)
      for (int j = 0; j < k; ++j) z(r, j) = centres(labels[std::size_t(r)], j) + rnd::normal(rng);
  } else if (spec.nonlinearity == Nonlinearity::Xor) {
    const double h = spec.separation / 2.0;
    for (int r = 0; r < spec.n; ++r) {
      const int q = r % 4;
      for (int j = 0; j < k; ++j) z(r, j) = rnd::normal(rng);
      z(r, 0) += (q & 1) ? h : -h;
      z(r, 1) += (q & 2) ? h : -h;
      labels[std::size_t(r)] = (z(r, 0) > 0.0) != (z(r, 1) > 0.0);
    }
  } else {
    const double inner = std::sqrt(double(k));
    for (int r = 0; r < spec.n; ++r) {
      Eigen::VectorXd v(k);
      for (int j = 0; j < k; ++j) v(j) = rnd::normal(rng);
      if (r % 2 == 1) {
        const double norm = v.norm();
        const double radius = inner + spec.separation + 0.5 * rnd::normal(rng);
        if (norm > 0.0) v *= radius / norm;
      }
      z.row(r) = v.transpose();
      labels[std::size_t(r)] = v.norm() > inner + spec.separation / 2.0;
    }
  }

  DatasetTable t;
  if (k < spec.d) {
    Eigen::MatrixXd g(spec.d, k);
    for (int i = 0; i < spec.d; ++i)
      for (int j = 0; j < k; ++j) g(i, j) = rnd::normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(spec.d, k);
    t.features = z * q.transpose();
  } else {
    t.features = z;
  }
  t.labels = std::move(labels);
  t.num_classes = spec.classes;
  t.dataset_id = spec.dataset_id;
  t.domain = spec.domain;
  validate(t);
  return t;
}

std::vector<ArchDescriptor> ArchGrid::expand() const
{
  std::vector<ArchDescriptor> out;
  for (const auto& [family, depth] : families)
    for (int f : filters)
      for (int u : dense_units)
        for (double p : dropout)
          for (double lr : learning_rate) out.push_back({family, depth, f, u, p, lr});
  return out;
}

void validate(const MetaCorpusSpec& s)
{
  if (s.datasets < 2) throw InputError("meta-corpus spec: need at least 2 datasets");
  if (!(s.difficulty_min <= s.difficulty_max)) throw InputError("meta-corpus spec: empty difficulty range");
  if (!(s.separation_easy > 0.0 && s.separation_hard > 0.0)) throw InputError("meta-corpus spec: separations must be > 0");
  if (!(s.noise >= 0.0)) throw InputError("meta-corpus spec: noise must be >= 0");
  if (!s.ids.empty() && int(s.ids.size()) != s.datasets) throw InputError("meta-corpus spec: one id per dataset required");
  if (s.grid.families.empty() || s.grid.filters.empty() || s.grid.dense_units.empty() || s.grid.dropout.empty() ||
      s.grid.learning_rate.empty())
    throw InputError("meta-corpus spec: architecture grid has an empty axis");
  for (const auto& a : s.grid.expand()) validate(a);
  validate(s.dataset);
}

namespace {

// (v - mean) / range over the grid values
double centred(double v, const std::vector<double>& values)
{
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  return (v - mean) / range;
}

template <class T, class F>
std::vector<double> mapped(const std::vector<T>& v, F f)
{
  std::vector<double> out;
  for (const auto& x : v) out.push_back(f(x));
  return out;
}

} // namespace

double depth_effect(const ArchGrid& grid, int depth)
{
  return centred(std::log(double(depth)), mapped(grid.families, [](const auto& f) { return std::log(double(f.second)); }));
}

double arch_effect(const ArchGrid& grid, const ArchDescriptor& a)
{
  const auto log2 = [](double x) { return std::log2(x); };
  const auto log10 = [](double x) { return std::log10(x); };
  return 0.4 * centred(std::log2(a.filters), mapped(grid.filters, log2)) +
         0.2 * centred(std::log2(a.dense_units), mapped(grid.dense_units, log2)) -
         0.3 * centred(a.dropout, grid.dropout) +
         0.3 * centred(std::log10(a.learning_rate), mapped(grid.learning_rate, log10));
}

double planted_base(const MetaCorpusSpec& s, double t)
{
  return s.base_easy + (s.base_hard - s.base_easy) * t;
}

double planted_offset(const MetaCorpusSpec& s, double t, const ArchDescriptor& arch)
{
  return s.interaction * depth_effect(s.grid, arch.depth) * (t - 0.5) + s.additive * arch_effect(s.grid, arch);
}

MetaCorpus generate_meta_corpus(const MetaCorpusSpec& spec)
{
  validate(spec);
  rnd::Engine master(spec.seed);
  rnd::Engine noise(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto grid = spec.grid.expand();
  MetaCorpus out;
  for (int i = 0; i < spec.datasets; ++i) {
    // jittered stratified draw so difficulties cover the range
    const double t = spec.difficulty_min +
                     (spec.difficulty_max - spec.difficulty_min) * (i + rnd::uniform01(master)) / spec.datasets;
    const double sep = std::exp(std::log(spec.separation_easy) +
                                t * (std::log(spec.separation_hard) - std::log(spec.separation_easy)));
    PlantedSpec ds = spec.dataset;
    ds.separation = sep;
    ds.seed = master();
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth_%02d", i + 1);
    ds.dataset_id = spec.ids.empty() ? std::string(buf) : spec.ids[std::size_t(i)];
    ds.domain = spec.domains.empty() ? std::string("synthetic") : spec.domains[std::size_t(i) % spec.domains.size()];
    out.datasets.push_back(generate_dataset(ds));
    out.difficulty.push_back(t);
    out.separation.push_back(sep);

    ManifestEntry e;
    e.dataset_id = ds.dataset_id;
    e.domain = ds.domain;
    e.format = DataFormat::Csv;
    e.features_path = std::filesystem::path("datasets") / (ds.dataset_id + ".csv");
    e.label_column = "label";
    e.num_classes = ds.classes;
    out.manifest.entries.push_back(e);

    const double base = planted_base(spec, t);
    for (const auto& arch : grid) {
      double a = base + planted_offset(spec, t, arch);
      if (spec.noise > 0.0) a += spec.noise * rnd::normal(noise);
      out.records.push_back({ds.dataset_id, arch, std::clamp(a, 0.0, 1.0)});
    }
  }
  return out;
}

void write_meta_corpus(const MetaCorpus& corpus, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir / "datasets");
  DatasetManifest manifest = corpus.manifest;
  for (std::size_t i = 0; i < corpus.datasets.size(); ++i) {
    auto& e = manifest.entries[i];
    e.features_path = dir / e.features_path;
    save_tabular(corpus.datasets[i], e.features_path, e.label_column);
  }
  save_manifest(manifest, dir / "manifest.csv");
  save_records(corpus.records, dir / "records.csv");
}

namespace {

std::string nonlinearity_name(Nonlinearity n)
{
  switch (n) {
  case Nonlinearity::None: return "none";
  case Nonlinearity::Xor: return "xor";
  case Nonlinearity::Ring: return "ring";
  }
  return "?";
}

Nonlinearity parse_nonlinearity(const std::string& s)
{
  if (s == "none") return Nonlinearity::None;
  if (s == "xor") return Nonlinearity::Xor;
  if (s == "ring") return Nonlinearity::Ring;
  throw InputError("unknown nonlinearity '" + s + "' (expected none, xor or ring)");
}

template <class T>
void read(const json& j, const char* key, T& field)
{
  if (j.contains(key)) field = j.at(key).get<T>();
}

} // namespace

json to_json(const PlantedSpec& s)
{
  return {{"n", s.n},
          {"d", s.d},
          {"classes", s.classes},
          {"separation", s.separation},
          {"nonlinearity", nonlinearity_name(s.nonlinearity)},
          {"proportions", s.proportions},
          {"intrinsic_dim", s.intrinsic_dim},
          {"seed", s.seed},
          {"dataset_id", s.dataset_id},
          {"domain", s.domain}};
}

json to_json(const MetaCorpusSpec& s)
{
  json families = json::array();
  for (const auto& [name, depth] : s.grid.families) families.push_back({{"family", name}, {"depth", depth}});
  return {{"datasets", s.datasets},
          {"difficulty_min", s.difficulty_min},
          {"difficulty_max", s.difficulty_max},
          {"separation_easy", s.separation_easy},
          {"separation_hard", s.separation_hard},
          {"base_easy", s.base_easy},
          {"base_hard", s.base_hard},
          {"interaction", s.interaction},
          {"additive", s.additive},
          {"noise", s.noise},
          {"dataset", to_json(s.dataset)},
          {"ids", s.ids},
          {"domains", s.domains},
          {"grid",
           {{"families", families},
            {"filters", s.grid.filters},
            {"dense_units", s.grid.dense_units},
            {"dropout", s.grid.dropout},
            {"learning_rate", s.grid.learning_rate}}},
          {"seed", s.seed}};
}

PlantedSpec planted_spec_from_json(const json& j)
{
  try {
    PlantedSpec s;
    read(j, "n", s.n);
    read(j, "d", s.d);
    read(j, "classes", s.classes);
    read(j, "separation", s.separation);
    if (j.contains("nonlinearity")) s.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
    read(j, "proportions", s.proportions);
    read(j, "intrinsic_dim", s.intrinsic_dim);
    read(j, "seed", s.seed);
    read(j, "dataset_id", s.dataset_id);
    read(j, "domain", s.domain);
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("planted spec: ") + e.what());
  }
}

MetaCorpusSpec meta_spec_from_json(const json& j)
{
  try {
    MetaCorpusSpec s;
    read(j, "datasets", s.datasets);
    read(j, "difficulty_min", s.difficulty_min);
    read(j, "difficulty_max", s.difficulty_max);
    read(j, "separation_easy", s.separation_easy);
    read(j, "separation_hard", s.separation_hard);
    read(j, "base_easy", s.base_easy);
    read(j, "base_hard", s.base_hard);
    read(j, "interaction", s.interaction);
    read(j, "additive", s.additive);
    read(j, "noise", s.noise);
    if (j.contains("dataset")) {
      const auto base = to_json(s.dataset);
      json merged = base;
      merged.update(j.at("dataset"));
      s.dataset = planted_spec_from_json(merged);
    }
    read(j, "ids", s.ids);
    read(j, "domains", s.domains);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("families")) {
        s.grid.families.clear();
        for (const auto& f : g.at("families"))
          s.grid.families.emplace_back(canonical_family(f.at("family").get<std::string>()), f.at("depth").get<int>());
      }
      read(g, "filters", s.grid.filters);
      read(g, "dense_units", s.grid.dense_units);
      read(g, "dropout", s.grid.dropout);
      read(g, "learning_rate", s.grid.learning_rate);
    }
    read(j, "seed", s.seed);
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("meta-corpus spec: ") + e.what());
  }
}

} // namespace perfcast
