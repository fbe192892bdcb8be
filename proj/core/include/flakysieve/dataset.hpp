#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flakysieve/label.hpp"

namespace flakysieve {

struct FlakyTest {
  std::string id;
  std::string project;
  std::string source;
  Label label;
};

// An immutable-after-load collection of tests sharing one taxonomy. Tests
// keep load order; ids are unique.
class Dataset {
 public:
  explicit Dataset(Taxonomy taxonomy) : taxonomy_(taxonomy) {}
  // Validates the invariants; throws LoadError on a violation.
  Dataset(Taxonomy taxonomy, std::vector<FlakyTest> tests);

  Taxonomy taxonomy() const { return taxonomy_; }
  const std::vector<FlakyTest>& tests() const { return tests_; }
  std::size_t size() const { return tests_.size(); }
  bool empty() const { return tests_.empty(); }

  const FlakyTest* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  // Number of tests per label, in label order.
  std::map<Label, std::size_t> class_counts() const;
  // Project names in sorted order.
  std::vector<std::string> projects() const;
  Dataset only_project(std::string_view project) const;

 private:
  Taxonomy taxonomy_;
  std::vector<FlakyTest> tests_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

struct SplitSpec {
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  bool group_by_project = false;
};

struct Split {
  Dataset train;
  Dataset test;
};

// CSV with header `id,project,label,source`. A trailing `parent_id` column
// (written for augmented datasets) is accepted and ignored.
Dataset parse_dataset(std::string_view csv_text, Taxonomy taxonomy);
Dataset load_dataset(const std::filesystem::path& path, Taxonomy taxonomy);

// Reads the label column only and returns the one taxonomy matching all of
// it; throws LoadError when none or several match.
Taxonomy detect_taxonomy(std::string_view csv_text);

std::string to_csv(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Keeps tests whose class (or (project, class) group when `group_by_project`)
// has at least `min_count` members.
Dataset filter_min_category_support(const Dataset& dataset, std::size_t min_count,
                                    bool group_by_project = false);

// Per-class stratified split. Each class c contributes
// round(train_ratio * |c|) members to train, clamped to [1, |c| - 1].
// Both outputs are sorted by id.
Split stratified_split(const Dataset& dataset, const SplitSpec& spec);

// Number of members of a class of size `class_size` that go to train.
std::size_t stratified_train_count(std::size_t class_size, double train_ratio);

}  // namespace flakysieve
