#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "flakysieve/label.hpp"
#include "flakysieve/rng.hpp"

namespace flakysieve::testing {
namespace {

// One statement per category so the sources differ by class.
const char* const kBodies[] = {
    "    Thread.sleep(%d);\n    assertTrue(future.isDone());\n",
    "    executor.submit(() -> counter.incrementAndGet());\n    assertEquals(%d, counter.get());\n",
    "    long deadline = System.currentTimeMillis() + %d;\n    assertTrue(clock.now() < deadline);\n",
    "    shared.put(\"key\", %d);\n    assertEquals(1, shared.size());\n",
    "    Set<String> names = new HashSet<>(List.of(\"a\", \"b\"));\n"
    "    assertEquals(\"[a, b]\", names.toString() + %d);\n",
};

std::string fill(const char* pattern, int value) {
  std::string out;
  for (const char* p = pattern; *p != '\0'; ++p) {
    if (p[0] == '%' && p[1] == 'd') {
      out += std::to_string(value);
      ++p;
    } else {
      out += *p;
    }
  }
  return out;
}

}  // namespace

Dataset flakycat_fixture() {
  std::vector<FlakyTest> tests;
  const auto labels = labels_of(Taxonomy::kFlakyCat);
  const char* const projects[] = {"alpha", "beta", "gamma"};
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (std::size_t i = 0; i < kFlakyCatCounts[c]; ++i) {
      const int n = static_cast<int>(i * 7 + c + 1);
      std::string source = "@Test\npublic void test" + std::to_string(i) + "() throws Exception {\n";
      source += "    int retries = " + std::to_string(n % 5 + 1) + ";\n";
      source += "    String name = \"case" + std::to_string(i) + "\";\n";
      source += fill(kBodies[c], n);
      source += "}\n";
      tests.push_back({std::string(labels[c].token()) + "_" + std::to_string(i),
                       projects[i % 3], std::move(source), labels[c]});
    }
  }
  return Dataset(Taxonomy::kFlakyCat, std::move(tests));
}

ClusterFixture cluster_fixture(std::size_t classes, std::size_t per_class, std::size_t dim,
                               double sigma, double spacing, std::uint64_t seed) {
  const auto labels = labels_of(Taxonomy::kFlakyCat);
  Rng rng(seed);
  ClusterFixture out{Dataset(Taxonomy::kFlakyCat), {}};
  std::vector<FlakyTest> tests;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      EmbeddingVector v;
      v.values.resize(dim);
      for (auto& x : v.values) x = static_cast<float>(sigma * rng.normal());
      v.values[c % dim] += static_cast<float>(spacing);
      const std::string id = "c" + std::to_string(c) + "_" + std::to_string(i);
      out.store.insert(id, std::move(v));
      tests.push_back({id, "synthetic", "void " + id + "() {}", labels[c]});
    }
  }
  out.dataset = Dataset(Taxonomy::kFlakyCat, std::move(tests));
  return out;
}

ClusterFixture standard_clusters(std::uint64_t seed) {
  return cluster_fixture(5, 40, 64, 1.0, 10.0 / std::sqrt(2.0), seed);
}

ClusterFixture downsample(const ClusterFixture& fixture, std::size_t per_class) {
  std::map<Label, std::size_t> taken;
  std::vector<FlakyTest> tests;
  EmbeddingStore store;
  for (const auto& t : fixture.dataset.tests()) {
    if (taken[t.label]++ >= per_class) continue;
    tests.push_back(t);
    store.insert(t.id, fixture.store.at(t.id));
  }
  return {Dataset(fixture.dataset.taxonomy(), std::move(tests)), std::move(store)};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto stamp = std::to_string(
      std::chrono::steady_clock::now().time_since_epoch().count());
  path_ = std::filesystem::temp_directory_path() /
          ("flakysieve-" + stamp + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace flakysieve::testing
