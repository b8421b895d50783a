#pragma once

#include "perfcast/complexity.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace perfcast {

/// Rows of complexity vectors keyed by (dataset_id, fraction, seed). A
/// dataset may carry several rows (subsample replicates); its primary row is
/// the one with the largest fraction, ties to the smallest seed.
class DcmTable {
public:
  DcmTable() = default;
  explicit DcmTable(std::vector<ComplexityVector> rows);

  const std::vector<ComplexityVector>& rows() const { return rows_; }

  /// Inserts, or replaces the row with the same key.
  void upsert(ComplexityVector row);

  bool contains(const std::string& dataset_id) const;
  const ComplexityVector& primary(const std::string& dataset_id) const;
  std::vector<ComplexityVector> replicates(const std::string& dataset_id) const;
  std::vector<std::string> dataset_ids() const;

  static DcmTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

private:
  std::vector<ComplexityVector> rows_;
};

} // namespace perfcast
