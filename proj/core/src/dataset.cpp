#include "flakysieve/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "flakysieve/csv.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/io.hpp"
#include "flakysieve/rng.hpp"

namespace flakysieve {
namespace {

constexpr std::string_view kColumns[] = {"id", "project", "label", "source"};

struct Table {
  std::vector<csv::Record> rows;  // data rows only
  bool has_parent_column = false;
};

Table read_table(std::string_view csv_text) {
  auto records = csv::parse(csv_text);
  if (records.empty()) throw LoadError("empty dataset");
  const auto& header = records.front().fields;
  const bool plain = header.size() == 4;
  const bool with_parent = header.size() == 5 && header[4] == "parent_id";
  if (!(plain || with_parent) || !std::equal(std::begin(kColumns), std::end(kColumns),
                                             header.begin())) {
    throw LoadError("header must be id,project,label,source");
  }
  Table table;
  table.has_parent_column = with_parent;
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  if (table.rows.empty()) throw LoadError("empty dataset");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].fields.size() != header.size()) {
      throw LoadError("row " + std::to_string(i + 1) + " (line " +
                      std::to_string(table.rows[i].line) + "): expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(table.rows[i].fields.size()));
    }
  }
  return table;
}

}  // namespace

Dataset::Dataset(Taxonomy taxonomy, std::vector<FlakyTest> tests)
    : taxonomy_(taxonomy), tests_(std::move(tests)) {
  for (std::size_t i = 0; i < tests_.size(); ++i) {
    const auto& t = tests_[i];
    if (t.id.empty()) throw LoadError("test " + std::to_string(i + 1) + " has an empty id");
    if (t.source.empty()) throw LoadError("test '" + t.id + "' has an empty source");
    if (t.label.taxonomy() != taxonomy_) {
      throw LoadError("test '" + t.id + "' label '" + std::string(t.label.token()) +
                      "' is not in taxonomy " + std::string(to_string(taxonomy_)));
    }
    if (!by_id_.emplace(t.id, i).second) throw LoadError("duplicate id '" + t.id + "'");
  }
}

const FlakyTest* Dataset::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &tests_[it->second];
}

std::map<Label, std::size_t> Dataset::class_counts() const {
  std::map<Label, std::size_t> counts;
  for (const auto& t : tests_) ++counts[t.label];
  return counts;
}

std::vector<std::string> Dataset::projects() const {
  std::set<std::string> names;
  for (const auto& t : tests_) names.insert(t.project);
  return {names.begin(), names.end()};
}

Dataset Dataset::only_project(std::string_view project) const {
  std::vector<FlakyTest> kept;
  for (const auto& t : tests_) {
    if (t.project == project) kept.push_back(t);
  }
  return Dataset(taxonomy_, std::move(kept));
}

Dataset parse_dataset(std::string_view csv_text, Taxonomy taxonomy) {
  auto table = read_table(csv_text);
  std::vector<FlakyTest> tests;
  tests.reserve(table.rows.size());
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto& f = table.rows[i].fields;
    const std::string where = "row " + std::to_string(i + 1);
    if (f[0].empty()) throw LoadError(where + ": empty id");
    if (f[3].empty()) throw LoadError(where + ": empty source");
    if (f[2].empty()) throw LoadError(where + ": missing label");
    auto label = parse_label(f[2], taxonomy);
    if (!label) {
      throw LoadError(where + ": unknown label '" + f[2] + "' for taxonomy " +
                      std::string(to_string(taxonomy)));
    }
    if (!seen.insert(f[0]).second) throw LoadError(where + ": duplicate id '" + f[0] + "'");
    tests.push_back({std::move(f[0]), std::move(f[1]), std::move(f[3]), *label});
  }
  return Dataset(taxonomy, std::move(tests));
}

Dataset load_dataset(const std::filesystem::path& path, Taxonomy taxonomy) {
  return parse_dataset(read_file(path), taxonomy);
}

Taxonomy detect_taxonomy(std::string_view csv_text) {
  auto table = read_table(csv_text);
  std::set<std::string> distinct;
  for (const auto& row : table.rows) distinct.insert(row.fields[2]);
  std::vector<std::string> tokens(distinct.begin(), distinct.end());
  auto taxonomy = infer_taxonomy(tokens);
  if (!taxonomy) throw LoadError("labels do not belong to a single taxonomy");
  return *taxonomy;
}

std::string to_csv(const Dataset& dataset) {
  std::string out = "id,project,label,source\n";
  for (const auto& t : dataset.tests()) {
    csv::append_field(out, t.id);
    out.push_back(',');
    csv::append_field(out, t.project);
    out.push_back(',');
    csv::append_field(out, t.label.token());
    out.push_back(',');
    csv::append_field(out, t.source, /*force_quote=*/true);
    out.push_back('\n');
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(dataset));
}

Dataset filter_min_category_support(const Dataset& dataset, std::size_t min_count,
                                    bool group_by_project) {
  std::map<std::pair<std::string, Label>, std::size_t> counts;
  auto key = [&](const FlakyTest& t) {
    return std::make_pair(group_by_project ? t.project : std::string(), t.label);
  };
  for (const auto& t : dataset.tests()) ++counts[key(t)];
  std::vector<FlakyTest> kept;
  for (const auto& t : dataset.tests()) {
    if (counts[key(t)] >= min_count) kept.push_back(t);
  }
  return Dataset(dataset.taxonomy(), std::move(kept));
}

std::size_t stratified_train_count(std::size_t class_size, double train_ratio) {
  const auto rounded = static_cast<std::size_t>(
      std::llround(train_ratio * static_cast<double>(class_size)));
  return std::clamp<std::size_t>(rounded, 1, class_size - 1);
}

Split stratified_split(const Dataset& dataset, const SplitSpec& spec) {
  if (!(spec.train_ratio > 0.0 && spec.train_ratio <= 1.0)) {
    throw ConfigError("train_ratio must be in (0, 1]");
  }
  // Groups keyed by (project or "", label); std::map gives a fixed visiting order.
  std::map<std::pair<std::string, Label>, std::vector<std::size_t>> groups;
  const auto& tests = dataset.tests();
  for (std::size_t i = 0; i < tests.size(); ++i) {
    groups[{spec.group_by_project ? tests[i].project : std::string(), tests[i].label}]
        .push_back(i);
  }
  Rng rng(derive_seed(spec.seed, "stratified_split"));
  std::vector<FlakyTest> train;
  std::vector<FlakyTest> test;
  for (auto& [key, members] : groups) {
    if (members.size() < 2) {
      std::string name(key.second.token());
      if (!key.first.empty()) name = key.first + "/" + name;
      throw SplitError("class '" + name + "' has a single member; cannot stratify");
    }
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[rng.index(i + 1)]);
    }
    const std::size_t n_train = stratified_train_count(members.size(), spec.train_ratio);
    for (std::size_t k = 0; k < members.size(); ++k) {
      (k < n_train ? train : test).push_back(tests[members[k]]);
    }
  }
  auto by_id = [](const FlakyTest& a, const FlakyTest& b) { return a.id < b.id; };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(test.begin(), test.end(), by_id);
  return {Dataset(dataset.taxonomy(), std::move(train)),
          Dataset(dataset.taxonomy(), std::move(test))};
}

}  // namespace flakysieve
