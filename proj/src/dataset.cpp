#include "perfcast/dataset.hpp"

#include "perfcast/csv.hpp"
#include "perfcast/error.hpp"
#include "perfcast/log.hpp"
#include "perfcast/random.hpp"
#include "perfcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace perfcast {

std::vector<Eigen::Index> DatasetTable::class_counts() const
{
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void validate(const DatasetTable& table)
{
  const std::string who = table.dataset_id.empty() ? std::string("dataset") : table.dataset_id;
  if (table.rows() < 2) throw InputError(who + ": need at least 2 rows");
  if (table.cols() < 1) throw InputError(who + ": need at least 1 feature column");
  if (table.num_classes < 2) throw InputError(who + ": need at least 2 classes");
  if (static_cast<Eigen::Index>(table.labels.size()) != table.rows())
    throw InputError(who + ": label count does not match row count");
  std::vector<char> seen(static_cast<std::size_t>(table.num_classes), 0);
  for (int y : table.labels) {
    if (y < 0 || y >= table.num_classes) throw InputError(who + ": label " + std::to_string(y) + " out of range");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InputError(who + ": label set has gaps");
  if (!table.features.allFinite()) throw InputError(who + ": non-finite feature value");
}

StandardizationStats fit_standardization(const DatasetTable& table)
{
  if (table.rows() < 2) throw InputError("standardization needs at least 2 rows");
  StandardizationStats s;
  s.mean = stats::column_means(table.features);
  s.std = stats::column_variances(table.features).cwiseSqrt().cwiseMax(kStdFloor);
  return s;
}

DatasetTable apply_standardization(const DatasetTable& table, const StandardizationStats& s)
{
  if (s.mean.size() != table.cols() || s.std.size() != table.cols())
    throw InputError("standardization stats have " + std::to_string(s.mean.size()) + " columns, table has " +
                     std::to_string(table.cols()));
  DatasetTable out = table;
  out.features = ((table.features.rowwise() - s.mean.transpose()).array().rowwise() / s.std.transpose().array()).matrix();
  return out;
}

std::vector<Eigen::Index> subsample_indices(const DatasetTable& table, double fraction, std::uint64_t seed,
                                            bool stratified)
{
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("subsample fraction must be in (0, 1]");
  const Eigen::Index n = table.rows();
  const auto m = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
  rnd::Engine rng(seed);
  std::vector<Eigen::Index> picked;

  if (!stratified) {
    if (m < 2) throw InputError("subsample of " + std::to_string(m) + " rows is below the 2-row floor");
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    rnd::shuffle(all.begin(), all.end(), rng);
    picked.assign(all.begin(), all.begin() + m);
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  const int C = table.num_classes;
  const Eigen::Index floor_rows = std::max<Eigen::Index>(2 * C, 10);
  if (m < floor_rows)
    throw InputError("stratified subsample of " + std::to_string(m) + " rows is below the floor of " +
                     std::to_string(floor_rows));

  const auto counts = table.class_counts();
  std::vector<Eigen::Index> take(counts.size());
  std::vector<std::pair<double, int>> remainders;
  Eigen::Index assigned = 0;
  for (int c = 0; c < C; ++c) {
    const double quota = static_cast<double>(m) * static_cast<double>(counts[c]) / static_cast<double>(n);
    take[c] = static_cast<Eigen::Index>(std::floor(quota));
    assigned += take[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Eigen::Index k = 0; k < m - assigned; ++k) ++take[remainders[static_cast<std::size_t>(k)].second];

  for (int c = 0; c < C; ++c) {
    if (take[c] < 2)
      throw InputError("stratified subsample leaves class " + std::to_string(c) + " with " +
                       std::to_string(take[c]) + " rows (need 2)");
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (table.labels[i] == c) members.push_back(i);
    rnd::shuffle(members.begin(), members.end(), rng);
    picked.insert(picked.end(), members.begin(), members.begin() + take[c]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

DatasetTable subsample(const DatasetTable& table, double fraction, std::uint64_t seed, bool stratified)
{
  const auto idx = subsample_indices(table, fraction, seed, stratified);
  DatasetTable out;
  out.dataset_id = table.dataset_id;
  out.domain = table.domain;
  out.features = table.features(idx, Eigen::all);
  out.labels.reserve(idx.size());
  for (auto i : idx) out.labels.push_back(table.labels[i]);
  out.num_classes = table.num_classes;
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

const ManifestEntry* DatasetManifest::find(const std::string& dataset_id) const
{
  for (const auto& e : entries)
    if (e.dataset_id == dataset_id) return &e;
  return nullptr;
}

std::map<std::string, std::string> DatasetManifest::domains() const
{
  std::map<std::string, std::string> out;
  for (const auto& e : entries) out[e.dataset_id] = e.domain;
  return out;
}

namespace {

DataFormat parse_format(const std::string& token, const std::string& context)
{
  if (token == "csv") return DataFormat::Csv;
  if (token == "idx") return DataFormat::Idx;
  throw InputError(context + ": unknown format '" + token + "' (expected csv or idx)");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

} // namespace

DatasetManifest load_manifest(const std::filesystem::path& path)
{
  const auto table = csv::read(path);
  const std::string ctx = path.string();
  const auto c_id = table.require_column("dataset_id", ctx);
  const auto c_domain = table.require_column("domain", ctx);
  const auto c_format = table.require_column("format", ctx);
  const auto c_features = table.require_column("features_path", ctx);
  const auto c_labels = table.column("labels_path");
  const auto c_label_col = table.column("label_column");
  const auto c_classes = table.column("num_classes");

  const auto base = path.parent_path();
  DatasetManifest manifest;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = ctx + ":" + std::to_string(table.lines[r]);
    ManifestEntry e;
    e.dataset_id = row[c_id];
    if (e.dataset_id.empty()) throw InputError(where + ": empty dataset_id");
    if (!ids.insert(e.dataset_id).second) throw InputError(where + ": duplicate dataset_id '" + e.dataset_id + "'");
    e.domain = row[c_domain];
    e.format = parse_format(row[c_format], where);
    e.features_path = resolve(base, row[c_features]);
    if (c_labels) e.labels_path = resolve(base, row[*c_labels]);
    if (c_label_col) e.label_column = row[*c_label_col];
    if (c_classes && !row[*c_classes].empty())
      e.num_classes = static_cast<int>(csv::parse_int(row[*c_classes], where + " num_classes"));
    if (e.format == DataFormat::Idx && e.labels_path.empty())
      throw InputError(where + ": idx entry needs labels_path");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    if (p.empty()) return std::string();
    return p.lexically_relative(base).empty() ? p.string() : p.lexically_relative(base).string();
  };
  out << "dataset_id,domain,format,features_path,labels_path,label_column\n";
  for (const auto& e : manifest.entries) {
    out << csv::join({e.dataset_id, e.domain, e.format == DataFormat::Csv ? "csv" : "idx", rel(e.features_path),
                      rel(e.labels_path), e.label_column})
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Tabular CSV

DatasetTable load_tabular(const ManifestEntry& entry)
{
  const auto table = csv::read(entry.features_path);
  const std::string ctx = entry.features_path.string();
  const std::string label_name = entry.label_column.empty() ? std::string("label") : entry.label_column;
  const auto c_label = table.require_column(label_name, ctx);

  DatasetTable out;
  out.dataset_id = entry.dataset_id;
  out.domain = entry.domain;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(table.header.size()) - 1;
  if (d < 1) throw InputError(ctx + ": no feature columns");
  out.features.resize(n, d);

  std::unordered_map<std::string, int> codes;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == c_label) continue;
      const std::string where =
          ctx + ": row " + std::to_string(table.lines[static_cast<std::size_t>(i)]) + ", column '" + table.header[c] + "'";
      const double v = csv::parse_double(row[c], where);
      if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
      out.features(i, j++) = v;
    }
    auto [it, fresh] = codes.try_emplace(row[c_label], static_cast<int>(codes.size()));
    out.labels.push_back(it->second);
  }
  out.num_classes = static_cast<int>(codes.size());
  if (out.num_classes < 2) throw InputError(ctx + ": only one class present (need at least 2)");
  if (entry.num_classes && *entry.num_classes != out.num_classes)
    warn(entry.dataset_id + ": manifest declares " + std::to_string(*entry.num_classes) + " classes, found " +
         std::to_string(out.num_classes));
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at)
{
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) | (std::uint32_t(b[at + 2]) << 8) |
         std::uint32_t(b[at + 3]);
}

IdxArray read_idx(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string ctx = path.string();
  if (bytes.size() < 4) throw InputError(ctx + ": truncated IDX header");
  // magic: 0x00 0x00 <type> <rank>; only unsigned-byte payloads (0x08) are supported
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08)
    throw InputError(ctx + ": IDX magic mismatch (expected 0x0000 08 <rank>)");
  const std::size_t rank = bytes[3];
  if (rank == 0 || bytes.size() < 4 + 4 * rank) throw InputError(ctx + ": truncated IDX header");
  IdxArray arr;
  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    arr.dims.push_back(read_be32(bytes, 4 + 4 * k));
    count *= arr.dims.back();
  }
  const std::size_t offset = 4 + 4 * rank;
  if (bytes.size() - offset != count)
    throw InputError(ctx + ": IDX payload has " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                     std::to_string(count));
  arr.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return arr;
}

} // namespace

DatasetTable load_idx(const std::filesystem::path& images, const std::filesystem::path& labels)
{
  const auto img = read_idx(images);
  const auto lab = read_idx(labels);
  if (img.dims.size() != 3 && img.dims.size() != 4)
    throw InputError(images.string() + ": image file must have rank 3 (count,H,W) or 4 (count,H,W,channels)");
  if (lab.dims.size() != 1) throw InputError(labels.string() + ": label file must have rank 1");
  if (img.dims[0] != lab.dims[0])
    throw InputError("IDX count mismatch: " + std::to_string(img.dims[0]) + " images vs " +
                     std::to_string(lab.dims[0]) + " labels");

  const auto n = static_cast<Eigen::Index>(img.dims[0]);
  Eigen::Index d = 1;
  for (std::size_t k = 1; k < img.dims.size(); ++k) d *= static_cast<Eigen::Index>(img.dims[k]);

  DatasetTable out;
  out.features.resize(n, d);
  // row-major flattening: pixel (h, w, ch) of image i lands at column (h*W + w)*channels + ch
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      out.features(i, j) = static_cast<double>(img.data[static_cast<std::size_t>(i * d + j)]) / 255.0;

  // Dense codes in ascending numeric order, so digit k stays k when all are present.
  std::set<int> distinct(lab.data.begin(), lab.data.end());
  std::map<int, int> code;
  for (int v : distinct) code.emplace(v, static_cast<int>(code.size()));
  out.labels.reserve(static_cast<std::size_t>(n));
  for (auto v : lab.data) out.labels.push_back(code.at(v));
  out.num_classes = static_cast<int>(code.size());
  if (out.num_classes < 2) throw InputError(labels.string() + ": only one class present (need at least 2)");
  validate(out);
  return out;
}

DatasetTable load_dataset(const ManifestEntry& entry)
{
  DatasetTable t = entry.format == DataFormat::Csv ? load_tabular(entry) : load_idx(entry.features_path, entry.labels_path);
  t.dataset_id = entry.dataset_id;
  t.domain = entry.domain;
  return t;
}

void save_tabular(const DatasetTable& table, const std::filesystem::path& path, const std::string& label_column)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  std::vector<std::string> fields;
  for (Eigen::Index j = 0; j < table.cols(); ++j) fields.push_back("f" + std::to_string(j));
  fields.push_back(label_column);
  out << csv::join(fields) << '\n';
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    fields.clear();
    for (Eigen::Index j = 0; j < table.cols(); ++j) fields.push_back(csv::format_double(table.features(i, j)));
    fields.push_back("c" + std::to_string(table.labels[static_cast<std::size_t>(i)]));
    out << csv::join(fields) << '\n';
  }
}

} // namespace perfcast
