#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flakysieve/augment.hpp"
#include "flakysieve/dataset.hpp"
#include "flakysieve/embed.hpp"
#include "flakysieve/siamese.hpp"

namespace flakysieve {

inline constexpr std::string_view kNearestCentroidRule = "nearest_centroid";

// Mean encoded training vector per class.
class CentroidIndex {
 public:
  struct Entry {
    Label label;
    std::vector<double> centroid;
    std::size_t count = 0;
  };

  CentroidIndex() = default;
  explicit CentroidIndex(std::vector<Entry> entries);

  // Entries sorted by label token, which makes tie-breaking a first-minimum scan.
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().centroid.size(); }
  const Entry* find(Label label) const;

 private:
  std::vector<Entry> entries_;
};

// centroid_c = mean of forward(model, x_i) over members of c. Every class in
// `expected` must have a member, else IndexError.
CentroidIndex build_centroids(const SiameseModel& model, const EmbeddingStore& store,
                              std::span<const LabeledId> train,
                              std::span<const Label> expected = {});
CentroidIndex build_centroids(const SiameseModel& model, std::span<const EmbeddingVector> inputs,
                              std::span<const Label> labels, std::span<const Label> expected = {});

// Label of the nearest centroid (squared Euclidean) to forward(model, x).
// Ties go to the lexicographically smallest label token.
Label predict(const SiameseModel& model, const CentroidIndex& index, std::span<const float> x);
Label nearest_centroid(const CentroidIndex& index, std::span<const double> encoded);

struct ClassMetrics {
  Label label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> per_class;  // in taxonomy order
  double weighted_avg_f1 = 0.0;
  // rows = truth, cols = prediction, indexed like per_class
  std::vector<std::vector<std::size_t>> confusion;
  double train_seconds = 0.0;
  double embed_seconds = 0.0;
  std::string decision_rule{kNearestCentroidRule};
  std::uint64_t seed = 0;

  std::size_t total_support() const;
  const ClassMetrics* find(Label label) const;
};

// Precision, recall and F1 per class (0/0 counts as 0), support-weighted F1
// and the confusion matrix. Throws ScoreError on empty or unequal inputs.
EvalReport score(std::span<const Label> predictions, std::span<const Label> truths);

enum class AugmentMode {
  kNone,
  kTokenMutation,    // mutate test sources, embed variants via the provider
  kEmbeddingJitter,  // copy train vectors with Gaussian noise
};

struct ExperimentAugmentation {
  AugmentMode mode = AugmentMode::kNone;
  // Size of the augmented train partition. 0 scales the partition by
  // 639/369, the ratio used for FlakyCat.
  std::size_t target_total = 0;
  double jitter_sigma = 0.1;
};

struct ExperimentConfig {
  SplitSpec split;
  ExperimentAugmentation augmentation;
  TrainConfig train;
  bool per_project = false;
};

struct ProjectReport {
  std::string project;
  EvalReport report;
};

// Support-weighted roll-up over projects (the "Total/Weighted Avg." row).
struct ExperimentTotal {
  std::size_t support = 0;
  double weighted_avg_f1 = 0.0;
  double train_seconds = 0.0;
  double embed_seconds = 0.0;
};

struct ExperimentResult {
  // Global mode: `report` only. Per-project mode: one entry per project
  // (sorted by name), `report` scores the pooled predictions of all projects
  // and `total` weights each project's F1 by its test support.
  std::vector<ProjectReport> projects;
  EvalReport report;
  ExperimentTotal total;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<std::string> test_ids;
};

// split -> optional augmentation of the train partition -> embed -> train ->
// centroids -> predict the test partition -> score. Errors carry the stage
// name. `train_seconds` covers the train call only.
ExperimentResult run_experiment(const Dataset& dataset, TestEmbedder& embedder,
                                const ExperimentConfig& config);

// Trained model evaluated on a fixed split: centroids from `train`, scored on
// `test`.
EvalReport evaluate_split(const SiameseModel& model, const Dataset& train, const Dataset& test,
                          TestEmbedder& embedder);

}  // namespace flakysieve
