#include "perfcast/dcm_table.hpp"

#include "perfcast/csv.hpp"
#include "perfcast/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace perfcast {

namespace {

bool same_key(const ComplexityVector& a, const ComplexityVector& b)
{
  return a.provenance.dataset_id == b.provenance.dataset_id && a.provenance.fraction == b.provenance.fraction &&
         a.provenance.seed == b.provenance.seed;
}

bool key_less(const ComplexityVector& a, const ComplexityVector& b)
{
  const auto& pa = a.provenance;
  const auto& pb = b.provenance;
  if (pa.dataset_id != pb.dataset_id) return pa.dataset_id < pb.dataset_id;
  if (pa.fraction != pb.fraction) return pa.fraction < pb.fraction;
  return pa.seed < pb.seed;
}

} // namespace

DcmTable::DcmTable(std::vector<ComplexityVector> rows)
{
  for (auto& r : rows) upsert(std::move(r));
}

void DcmTable::upsert(ComplexityVector row)
{
  auto it = std::find_if(rows_.begin(), rows_.end(), [&](const auto& r) { return same_key(r, row); });
  if (it != rows_.end()) {
    *it = std::move(row);
    return;
  }
  rows_.insert(std::upper_bound(rows_.begin(), rows_.end(), row, key_less), std::move(row));
}

bool DcmTable::contains(const std::string& id) const
{
  return std::any_of(rows_.begin(), rows_.end(), [&](const auto& r) { return r.provenance.dataset_id == id; });
}

const ComplexityVector& DcmTable::primary(const std::string& id) const
{
  const ComplexityVector* best = nullptr;
  for (const auto& r : rows_) {
    if (r.provenance.dataset_id != id) continue;
    if (!best || r.provenance.fraction > best->provenance.fraction ||
        (r.provenance.fraction == best->provenance.fraction && r.provenance.seed < best->provenance.seed))
      best = &r;
  }
  if (!best) throw InputError("dataset '" + id + "' has no row in the DCM table");
  return *best;
}

std::vector<ComplexityVector> DcmTable::replicates(const std::string& id) const
{
  std::vector<ComplexityVector> out;
  for (const auto& r : rows_)
    if (r.provenance.dataset_id == id) out.push_back(r);
  return out;
}

std::vector<std::string> DcmTable::dataset_ids() const
{
  std::set<std::string> ids;
  for (const auto& r : rows_) ids.insert(r.provenance.dataset_id);
  return {ids.begin(), ids.end()};
}

DcmTable DcmTable::load(const std::filesystem::path& path)
{
  const auto table = csv::read(path);
  const std::string ctx = path.string();
  const auto c_id = table.require_column("dataset_id", ctx);
  const auto c_fraction = table.require_column("fraction", ctx);
  const auto c_seed = table.require_column("seed", ctx);
  std::array<std::size_t, kMeasureCount> c_measure{};
  for (std::size_t k = 0; k < kMeasureCount; ++k) c_measure[k] = table.require_column(kMeasureNames[k], ctx);

  DcmTable out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = ctx + ":" + std::to_string(table.lines[r]);
    MeasureVector v;
    for (std::size_t k = 0; k < kMeasureCount; ++k) {
      v(static_cast<Eigen::Index>(k)) = csv::parse_double(row[c_measure[k]], where + " " + std::string(kMeasureNames[k]));
      if (!std::isfinite(v(static_cast<Eigen::Index>(k))))
        throw InputError(where + ": non-finite " + std::string(kMeasureNames[k]));
    }
    Provenance p{row[c_id], csv::parse_double(row[c_fraction], where + " fraction"),
                 static_cast<std::uint64_t>(csv::parse_int(row[c_seed], where + " seed")), {}};
    out.upsert(ComplexityVector::from_values(v, std::move(p)));
  }
  return out;
}

void DcmTable::save(const std::filesystem::path& path) const
{
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  std::vector<std::string> fields{"dataset_id", "fraction", "seed"};
  for (auto name : kMeasureNames) fields.emplace_back(name);
  out << csv::join(fields) << '\n';
  for (const auto& r : rows_) {
    fields = {r.provenance.dataset_id, csv::format_double(r.provenance.fraction), std::to_string(r.provenance.seed)};
    const auto v = r.values();
    for (Eigen::Index k = 0; k < v.size(); ++k) fields.push_back(csv::format_double(v(k)));
    out << csv::join(fields) << '\n';
  }
}

} // namespace perfcast
