#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "flakysieve/dataset.hpp"
#include "flakysieve/embed.hpp"

namespace flakysieve::testing {

// Category sizes of the public FlakyCat release.
inline constexpr std::size_t kFlakyCatCounts[] = {125, 48, 42, 103, 51};
inline constexpr std::size_t kFlakyCatTotal = 369;

// 369 synthetic Java-like tests with the FlakyCat category counts above.
Dataset flakycat_fixture();

struct ClusterFixture {
  Dataset dataset;
  EmbeddingStore store;
};

// Gaussian clusters, one per FlakyCat category, centred at spacing * e_k.
ClusterFixture cluster_fixture(std::size_t classes, std::size_t per_class, std::size_t dim,
                               double sigma, double spacing, std::uint64_t seed);

// The acceptance fixture: 5 x 40 points in 64 dims, unit sigma, centres 10 sigma apart.
ClusterFixture standard_clusters(std::uint64_t seed);

// First `per_class` members of every class.
ClusterFixture downsample(const ClusterFixture& fixture, std::size_t per_class);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace flakysieve::testing
