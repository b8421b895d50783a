#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace perfcast {

/// Numeric feature matrix (n x d) with dense integer class labels 0..C-1.
struct DatasetTable {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int num_classes = 0;
  std::string dataset_id;
  std::string domain;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
  std::vector<Eigen::Index> class_counts() const;
};

/// Throws InputError unless n >= 2, d >= 1, C >= 2, labels in [0, C) with no
/// gaps, and every feature is finite.
void validate(const DatasetTable& table);

inline constexpr double kStdFloor = 1e-12;

struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std; // floored at kStdFloor
};

StandardizationStats fit_standardization(const DatasetTable& table);
DatasetTable apply_standardization(const DatasetTable& table, const StandardizationStats& stats);

/// Row indices (ascending) selected by subsample(); exposed for audits.
std::vector<Eigen::Index> subsample_indices(const DatasetTable& table, double fraction, std::uint64_t seed,
                                            bool stratified);

/// Seeded random subset of round(fraction * n) rows. Stratified mode uses
/// largest-remainder allocation so each class count is within one row of its
/// proportional quota, and requires every class to keep at least two rows.
DatasetTable subsample(const DatasetTable& table, double fraction, std::uint64_t seed, bool stratified);

enum class DataFormat { Csv, Idx };

struct ManifestEntry {
  std::string dataset_id;
  std::string domain;
  DataFormat format = DataFormat::Csv;
  std::filesystem::path features_path;
  std::filesystem::path labels_path; // idx only
  std::string label_column;          // csv only
  std::optional<int> num_classes;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const std::string& dataset_id) const;
  std::map<std::string, std::string> domains() const;
};

/// Paths in the manifest are resolved relative to the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

DatasetTable load_tabular(const ManifestEntry& entry);
DatasetTable load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
DatasetTable load_dataset(const ManifestEntry& entry);

/// Writes a table as header-led CSV (f0..f{d-1}, then the label column).
void save_tabular(const DatasetTable& table, const std::filesystem::path& path,
                  const std::string& label_column = "label");

} // namespace perfcast
