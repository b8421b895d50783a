#pragma once

#include "perfcast/dataset.hpp"
#include "perfcast/records.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace perfcast {

enum class Nonlinearity { None, Xor, Ring };

/// Gaussian class blobs (unit noise) in an intrinsic subspace, rotated into d
/// dimensions when intrinsic_dim < d.
struct PlantedSpec {
  int n = 200;
  int d = 2;
  int classes = 2;
  double separation = 2.0;  // distance between neighbouring class means
  Nonlinearity nonlinearity = Nonlinearity::None;
  std::vector<double> proportions; // empty: balanced
  int intrinsic_dim = 0;           // 0: d
  std::uint64_t seed = 0;
  std::string dataset_id = "synthetic";
  std::string domain = "synthetic";
};

void validate(const PlantedSpec& spec);

/// Xor labels each point by the sign pattern of its first two intrinsic
/// coordinates (two classes, blobs at the four quadrant centres); ring labels
/// by radius around the origin (two classes). Both ignore `proportions`.
DatasetTable generate_dataset(const PlantedSpec& spec);

/// Architecture grid: each family at its fixed depth, crossed with every
/// filters / dense / dropout / learning-rate value.
struct ArchGrid {
  std::vector<std::pair<std::string, int>> families{{"LeNet", 5}, {"VGG", 16}, {"ResNet", 18}};
  std::vector<int> filters{8, 16, 32, 64};
  std::vector<int> dense_units{64, 128, 256};
  std::vector<double> dropout{0.0, 0.25, 0.5};
  std::vector<double> learning_rate{0.001, 0.0005, 0.0001};

  std::vector<ArchDescriptor> expand() const;
};

/// accuracy = clamp(base(difficulty) + offset(arch, difficulty) + noise, 0, 1)
///   base   = base_easy + (base_hard - base_easy) * difficulty
///   offset = interaction * depth_effect(depth) * (difficulty - 0.5) + additive * arch_effect(arch)
/// Difficulty t maps to separation exp(log(sep_easy) + t (log(sep_hard) - log(sep_easy))),
/// so base is affine in log-separation.
struct MetaCorpusSpec {
  int datasets = 7;
  double difficulty_min = 0.0;
  double difficulty_max = 1.0;
  double separation_easy = 6.0;
  double separation_hard = 0.5;
  double base_easy = 0.97;
  double base_hard = 0.55;
  double interaction = 0.0;
  double additive = 0.0;
  double noise = 0.0;
  PlantedSpec dataset{600, 6, 3, 0.0, Nonlinearity::None, {}, 3, 0, "", ""};
  std::vector<std::string> ids;     // empty: synth_01, synth_02, ...
  std::vector<std::string> domains; // cycled over datasets; empty: "synthetic"
  ArchGrid grid;
  std::uint64_t seed = 0;
};

void validate(const MetaCorpusSpec& spec);

/// Centred log-depth, scaled to unit range over the grid's depths.
double depth_effect(const ArchGrid& grid, int depth);
/// Fixed mild effect of dropout, learning rate and width, zero-mean over the grid.
double arch_effect(const ArchGrid& grid, const ArchDescriptor& arch);

/// Noise-free, unclamped law.
double planted_base(const MetaCorpusSpec& spec, double difficulty);
double planted_offset(const MetaCorpusSpec& spec, double difficulty, const ArchDescriptor& arch);

struct MetaCorpus {
  std::vector<DatasetTable> datasets;
  std::vector<double> difficulty;
  std::vector<double> separation;
  std::vector<PerformanceRecord> records;
  DatasetManifest manifest; // paths relative to the corpus directory
};

MetaCorpus generate_meta_corpus(const MetaCorpusSpec& spec);

/// Writes datasets/<id>.csv, manifest.csv and records.csv under `dir`.
void write_meta_corpus(const MetaCorpus& corpus, const std::filesystem::path& dir);

nlohmann::json to_json(const PlantedSpec& spec);
nlohmann::json to_json(const MetaCorpusSpec& spec);
PlantedSpec planted_spec_from_json(const nlohmann::json& j);
MetaCorpusSpec meta_spec_from_json(const nlohmann::json& j);

} // namespace perfcast
