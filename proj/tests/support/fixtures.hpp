#pragma once

#include "perfcast/dataset.hpp"
#include "perfcast/random.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fixtures {

inline perfcast::DatasetTable table(const Eigen::MatrixXd& x, std::vector<int> labels, std::string id = "t")
{
  perfcast::DatasetTable t;
  t.features = x;
  t.num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  t.labels = std::move(labels);
  t.dataset_id = std::move(id);
  return t;
}

/// One-feature table from a list of values.
inline perfcast::DatasetTable column(std::initializer_list<double> values, std::vector<int> labels)
{
  Eigen::MatrixXd x(Eigen::Index(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) x(i++, 0) = v;
  return table(x, std::move(labels));
}

/// Gaussian cloud with labels drawn uniformly; every class gets at least two rows.
inline perfcast::DatasetTable random_cloud(int n, int d, int classes, std::uint64_t seed)
{
  perfcast::rnd::Engine rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = perfcast::rnd::normal(rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[std::size_t(i)] = i < 2 * classes ? i % classes : int(perfcast::rnd::uniform_index(rng, std::uint64_t(classes)));
  return table(x, labels);
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
  TempDir()
  {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("perfcast_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& text) const
  {
    const auto p = path_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace fixtures
