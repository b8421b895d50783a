#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perfcast {

/// Families recognized by the record loader, in one-hot slot order.
const std::vector<std::string>& known_families();

/// Case-insensitive lookup returning the canonical spelling; throws InputError.
std::string canonical_family(std::string_view name);

struct ArchDescriptor {
  std::string family;
  int depth = 0;       // weighted-layer count
  int filters = 0;
  int dense_units = 0;
  double dropout = 0.0;
  double learning_rate = 0.0;

  bool operator==(const ArchDescriptor&) const = default;
};

void validate(const ArchDescriptor& arch);

struct PerformanceRecord {
  std::string dataset_id;
  ArchDescriptor arch;
  double accuracy = 0.0;
};

std::vector<PerformanceRecord> load_records(const std::filesystem::path& path);
void save_records(std::span<const PerformanceRecord> records, const std::filesystem::path& path);

/// Identity of a record: dataset plus every architecture field.
std::string record_key(const PerformanceRecord& record);

/// Distinct dataset ids in ascending order.
std::vector<std::string> dataset_ids(std::span<const PerformanceRecord> records);

} // namespace perfcast
