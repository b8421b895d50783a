#include "perfcast/records.hpp"

#include "perfcast/csv.hpp"
#include "perfcast/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

namespace perfcast {

const std::vector<std::string>& known_families()
{
  static const std::vector<std::string> families{"LeNet", "VGG", "ResNet"};
  return families;
}

std::string canonical_family(std::string_view name)
{
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  for (const auto& f : known_families())
    if (lower(f) == lower(name)) return f;
  throw InputError("unknown architecture family '" + std::string(name) + "'");
}

void validate(const ArchDescriptor& a)
{
  canonical_family(a.family);
  if (a.depth <= 0) throw InputError("depth must be a positive integer");
  if (a.filters <= 0) throw InputError("filters must be a positive integer");
  if (a.dense_units <= 0) throw InputError("dense_units must be a positive integer");
  if (!(std::isfinite(a.dropout) && a.dropout >= 0.0 && a.dropout < 1.0)) throw InputError("dropout must be in [0, 1)");
  if (!(std::isfinite(a.learning_rate) && a.learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
}

std::vector<PerformanceRecord> load_records(const std::filesystem::path& path)
{
  const auto table = csv::read(path);
  const std::string ctx = path.string();
  const auto c_id = table.require_column("dataset_id", ctx);
  const auto c_family = table.require_column("family", ctx);
  const auto c_depth = table.require_column("depth", ctx);
  const auto c_filters = table.require_column("filters", ctx);
  const auto c_dense = table.require_column("dense_units", ctx);
  const auto c_dropout = table.require_column("dropout", ctx);
  const auto c_lr = table.require_column("learning_rate", ctx);
  const auto c_acc = table.require_column("accuracy", ctx);

  std::vector<PerformanceRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = ctx + ":" + std::to_string(table.lines[r]);
    try {
      PerformanceRecord rec;
      rec.dataset_id = row[c_id];
      if (rec.dataset_id.empty()) throw InputError("empty dataset_id");
      rec.arch.family = canonical_family(row[c_family]);
      rec.arch.depth = static_cast<int>(csv::parse_int(row[c_depth], "depth"));
      rec.arch.filters = static_cast<int>(csv::parse_int(row[c_filters], "filters"));
      rec.arch.dense_units = static_cast<int>(csv::parse_int(row[c_dense], "dense_units"));
      rec.arch.dropout = csv::parse_double(row[c_dropout], "dropout");
      rec.arch.learning_rate = csv::parse_double(row[c_lr], "learning_rate");
      rec.accuracy = csv::parse_double(row[c_acc], "accuracy");
      validate(rec.arch);
      if (!(rec.accuracy >= 0.0 && rec.accuracy <= 1.0))
        throw InputError("accuracy " + row[c_acc] + " outside [0, 1]");
      out.push_back(std::move(rec));
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

void save_records(std::span<const PerformanceRecord> records, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "dataset_id,family,depth,filters,dense_units,dropout,learning_rate,accuracy\n";
  for (const auto& r : records) {
    out << csv::join({r.dataset_id, r.arch.family, std::to_string(r.arch.depth), std::to_string(r.arch.filters),
                      std::to_string(r.arch.dense_units), csv::format_double(r.arch.dropout),
                      csv::format_double(r.arch.learning_rate), csv::format_double(r.accuracy)})
        << '\n';
  }
}

std::string record_key(const PerformanceRecord& r)
{
  return csv::join({r.dataset_id, r.arch.family, std::to_string(r.arch.depth), std::to_string(r.arch.filters),
                    std::to_string(r.arch.dense_units), csv::format_double(r.arch.dropout),
                    csv::format_double(r.arch.learning_rate)});
}

std::vector<std::string> dataset_ids(std::span<const PerformanceRecord> records)
{
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.dataset_id);
  return {ids.begin(), ids.end()};
}

} // namespace perfcast
