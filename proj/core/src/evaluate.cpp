#include "flakysieve/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "flakysieve/error.hpp"

namespace flakysieve {
namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Encoded {
  std::vector<EmbeddingVector> vectors;
  std::vector<Label> labels;
};

Encoded encode_all(const Dataset& dataset, TestEmbedder& embedder) {
  Encoded out;
  out.vectors.reserve(dataset.size());
  for (const auto& t : dataset.tests()) {
    out.vectors.push_back(embedder.embed(t));
    out.labels.push_back(t.label);
  }
  return out;
}

void jitter(Encoded& train, std::size_t target_total, double sigma, std::uint64_t seed) {
  if (target_total <= train.vectors.size()) return;
  std::map<Label, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < train.labels.size(); ++i) members[train.labels[i]].push_back(i);
  std::vector<std::size_t> sizes;
  for (const auto& [label, idx] : members) sizes.push_back(idx.size());
  const auto quotas = apportion(sizes, target_total - train.vectors.size());
  Rng rng(derive_seed(seed, "embedding_jitter"));
  std::size_t k = 0;
  for (const auto& [label, idx] : members) {
    for (std::size_t q = 0; q < quotas[k]; ++q) {
      const auto& parent = train.vectors[idx[rng.index(idx.size())]];
      std::vector<float> values(parent.values);
      for (auto& v : values) v = static_cast<float>(v + sigma * rng.normal());
      train.vectors.emplace_back(std::move(values));
      train.labels.push_back(label);
    }
    ++k;
  }
}

std::size_t default_augment_target(std::size_t train_size) {
  // FlakyCat went from 369 tests to 639 scenarios.
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(train_size) * 639.0 / 369.0));
}

struct SingleRun {
  EvalReport report;
  std::size_t train_size = 0;
  std::vector<std::string> test_ids;
};

SingleRun run_single(const Dataset& dataset, TestEmbedder& embedder,
                     const ExperimentConfig& config) {
  const auto split = in_stage("split", [&] { return stratified_split(dataset, config.split); });

  const auto& aug = config.augmentation;
  const std::size_t target = aug.target_total > 0 ? aug.target_total
                                                  : default_augment_target(split.train.size());
  Dataset train_set = split.train;
  if (aug.mode == AugmentMode::kTokenMutation) {
    train_set = in_stage("augment", [&] {
      return augment_dataset(split.train, std::max(target, split.train.size()),
                             config.train.seed)
          .combined();
    });
  }

  const auto embed_start = std::chrono::steady_clock::now();
  auto train_encoded = in_stage("embed", [&] { return encode_all(train_set, embedder); });
  const auto test_encoded = in_stage("embed", [&] { return encode_all(split.test, embedder); });
  const double embed_seconds = seconds_since(embed_start);
  if (aug.mode == AugmentMode::kEmbeddingJitter) {
    jitter(train_encoded, target, aug.jitter_sigma, config.train.seed);
  }

  const std::size_t dim = train_encoded.vectors.front().dim();
  const auto trained = in_stage("train", [&] {
    const auto initial =
        init_model(dim, config.train.hidden_dims, config.train.embedding_size, config.train.seed);
    std::map<Label, std::size_t> ids;
    for (Label l : train_encoded.labels) ids.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [label, id] : ids) id = next++;
    std::vector<std::size_t> classes;
    for (Label l : train_encoded.labels) classes.push_back(ids[l]);
    return train(initial, train_encoded.vectors, classes, config.train);
  });

  std::vector<Label> expected;
  for (const auto& [label, count] : split.train.class_counts()) expected.push_back(label);
  const auto index = in_stage("centroids", [&] {
    return build_centroids(trained.model, train_encoded.vectors, train_encoded.labels, expected);
  });
  const auto predictions = in_stage("predict", [&] {
    std::vector<Label> out;
    for (const auto& x : test_encoded.vectors) out.push_back(predict(trained.model, index, x.span()));
    return out;
  });

  SingleRun run;
  run.report = in_stage("score", [&] { return score(predictions, test_encoded.labels); });
  run.report.train_seconds = trained.log.wall_clock_seconds;
  run.report.embed_seconds = embed_seconds;
  run.report.seed = config.train.seed;
  run.train_size = train_encoded.vectors.size();
  for (const auto& t : split.test.tests()) run.test_ids.push_back(t.id);
  return run;
}

}  // namespace

CentroidIndex::CentroidIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.label.token() < b.label.token();
  });
}

const CentroidIndex::Entry* CentroidIndex::find(Label label) const {
  for (const auto& e : entries_) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

CentroidIndex build_centroids(const SiameseModel& model, std::span<const EmbeddingVector> inputs,
                              std::span<const Label> labels, std::span<const Label> expected) {
  if (inputs.size() != labels.size()) throw IndexError("inputs and labels differ in length");
  if (inputs.empty()) throw IndexError("no training members");
  std::map<Label, CentroidIndex::Entry> acc;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto encoded = forward_exact(model, inputs[i].span());
    auto& entry = acc[labels[i]];
    entry.label = labels[i];
    if (entry.centroid.empty()) entry.centroid.assign(encoded.size(), 0.0);
    for (std::size_t d = 0; d < encoded.size(); ++d) entry.centroid[d] += encoded[d];
    ++entry.count;
  }
  for (Label l : expected) {
    if (!acc.contains(l)) {
      throw IndexError("class '" + std::string(l.token()) + "' has no training members");
    }
  }
  std::vector<CentroidIndex::Entry> entries;
  for (auto& [label, entry] : acc) {
    for (auto& v : entry.centroid) v /= static_cast<double>(entry.count);
    entries.push_back(std::move(entry));
  }
  return CentroidIndex(std::move(entries));
}

CentroidIndex build_centroids(const SiameseModel& model, const EmbeddingStore& store,
                              std::span<const LabeledId> train, std::span<const Label> expected) {
  std::vector<EmbeddingVector> inputs;
  std::vector<Label> labels;
  for (const auto& item : train) {
    const auto* v = store.find(item.id);
    if (v == nullptr) throw IndexError("missing embedding for '" + item.id + "'");
    inputs.push_back(*v);
    labels.push_back(item.label);
  }
  return build_centroids(model, inputs, labels, expected);
}

Label nearest_centroid(const CentroidIndex& index, std::span<const double> encoded) {
  if (index.empty()) throw PredictError("empty centroid index");
  if (encoded.size() != index.dim()) {
    throw ShapeError("encoding has " + std::to_string(encoded.size()) +
                     " values, centroids have " + std::to_string(index.dim()));
  }
  const CentroidIndex::Entry* best = nullptr;
  double best_distance = 0.0;
  for (const auto& entry : index.entries()) {
    double distance = 0.0;
    for (std::size_t d = 0; d < encoded.size(); ++d) {
      const double diff = encoded[d] - entry.centroid[d];
      distance += diff * diff;
    }
    if (best == nullptr || distance < best_distance) {
      best = &entry;
      best_distance = distance;
    }
  }
  return best->label;
}

Label predict(const SiameseModel& model, const CentroidIndex& index, std::span<const float> x) {
  if (index.empty()) throw PredictError("empty centroid index");
  return nearest_centroid(index, forward_exact(model, x));
}

std::size_t EvalReport::total_support() const {
  std::size_t total = 0;
  for (const auto& c : per_class) total += c.support;
  return total;
}

const ClassMetrics* EvalReport::find(Label label) const {
  for (const auto& c : per_class) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

EvalReport score(std::span<const Label> predictions, std::span<const Label> truths) {
  if (predictions.size() != truths.size()) {
    throw ScoreError("predictions (" + std::to_string(predictions.size()) +
                     ") and truths (" + std::to_string(truths.size()) + ") differ in length");
  }
  if (truths.empty()) throw ScoreError("nothing to score");
  std::set<Label> present(truths.begin(), truths.end());
  present.insert(predictions.begin(), predictions.end());
  const std::vector<Label> classes(present.begin(), present.end());
  auto position = [&](Label l) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), l) -
                                    classes.begin());
  };

  EvalReport report;
  const std::size_t n = classes.size();
  report.confusion.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++report.confusion[position(truths[i])][position(predictions[i])];
  }
  double weighted = 0.0;
  std::size_t total = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += report.confusion[c][k];
      col += report.confusion[k][c];
    }
    const std::size_t tp = report.confusion[c][c];
    const std::size_t fp = col - tp;
    const std::size_t fn = row - tp;
    ClassMetrics m;
    m.label = classes[c];
    m.support = row;
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    // 2PR/(P+R) written over counts; zero when TP is zero.
    m.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    weighted += static_cast<double>(m.support) * m.f1;
    total += m.support;
    report.per_class.push_back(m);
  }
  report.weighted_avg_f1 = weighted / static_cast<double>(total);
  return report;
}

EvalReport evaluate_split(const SiameseModel& model, const Dataset& train, const Dataset& test,
                          TestEmbedder& embedder) {
  const auto embed_start = std::chrono::steady_clock::now();
  const auto train_encoded = in_stage("embed", [&] { return encode_all(train, embedder); });
  const auto test_encoded = in_stage("embed", [&] { return encode_all(test, embedder); });
  const double embed_seconds = seconds_since(embed_start);
  std::vector<Label> expected;
  for (const auto& [label, count] : train.class_counts()) expected.push_back(label);
  const auto index = in_stage("centroids", [&] {
    return build_centroids(model, train_encoded.vectors, train_encoded.labels, expected);
  });
  const auto predictions = in_stage("predict", [&] {
    std::vector<Label> out;
    for (const auto& x : test_encoded.vectors) out.push_back(predict(model, index, x.span()));
    return out;
  });
  auto report = in_stage("score", [&] { return score(predictions, test_encoded.labels); });
  report.embed_seconds = embed_seconds;
  return report;
}

ExperimentResult run_experiment(const Dataset& dataset, TestEmbedder& embedder,
                                const ExperimentConfig& config) {
  in_stage("config", [&] { config.train.validate(); });
  if (dataset.empty()) throw LoadError("empty dataset").with_stage("split");

  ExperimentResult result;
  if (!config.per_project) {
    auto run = run_single(dataset, embedder, config);
    result.report = std::move(run.report);
    result.train_size = run.train_size;
    result.test_size = run.test_ids.size();
    result.test_ids = std::move(run.test_ids);
    result.total = {result.report.total_support(), result.report.weighted_avg_f1,
                    result.report.train_seconds, result.report.embed_seconds};
    return result;
  }

  std::vector<Label> all_predictions;
  std::vector<Label> all_truths;
  double weighted = 0.0;
  ExperimentConfig project_config = config;
  project_config.split.group_by_project = false;
  for (const auto& project : dataset.projects()) {
    const auto subset = dataset.only_project(project);
    SingleRun run;
    try {
      run = run_single(subset, embedder, project_config);
    } catch (const Error& e) {
      throw Error(e.kind(), "project '" + project + "': " + e.detail()).with_stage(e.stage());
    }
    // Rebuild the pooled label lists from the confusion matrix.
    const auto& r = run.report;
    for (std::size_t t = 0; t < r.per_class.size(); ++t) {
      for (std::size_t p = 0; p < r.per_class.size(); ++p) {
        for (std::size_t k = 0; k < r.confusion[t][p]; ++k) {
          all_truths.push_back(r.per_class[t].label);
          all_predictions.push_back(r.per_class[p].label);
        }
      }
    }
    result.total.support += r.total_support();
    result.total.train_seconds += r.train_seconds;
    result.total.embed_seconds += r.embed_seconds;
    weighted += static_cast<double>(r.total_support()) * r.weighted_avg_f1;
    result.train_size += run.train_size;
    result.test_size += run.test_ids.size();
    result.test_ids.insert(result.test_ids.end(), run.test_ids.begin(), run.test_ids.end());
    result.projects.push_back({project, std::move(run.report)});
  }
  result.total.weighted_avg_f1 =
      result.total.support == 0 ? 0.0 : weighted / static_cast<double>(result.total.support);
  result.report = score(all_predictions, all_truths);
  result.report.train_seconds = result.total.train_seconds;
  result.report.embed_seconds = result.total.embed_seconds;
  result.report.seed = config.train.seed;
  std::sort(result.test_ids.begin(), result.test_ids.end());
  return result;
}

}  // namespace flakysieve
