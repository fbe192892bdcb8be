#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flakysieve/embed.hpp"
#include "flakysieve/label.hpp"
#include "flakysieve/rng.hpp"

namespace flakysieve {

enum class Activation { kRelu, kIdentity };

// One fully connected layer. Weights are row-major, out_dim x in_dim.
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  Activation activation = Activation::kIdentity;

  float& weight(std::size_t row, std::size_t col) { return weights[row * in_dim + col]; }
  float weight(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Shared-weight encoder head: linear layers with ReLU between them and an
// identity output layer, no output normalisation. Every branch of a triplet
// runs through this one parameter set.
class SiameseModel {
 public:
  SiameseModel() = default;
  // Throws ConfigError when the layers do not chain, the last layer is not
  // identity, or a parameter is non-finite.
  explicit SiameseModel(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
  std::size_t embedding_size() const { return layers_.empty() ? 0 : layers_.back().out_dim; }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  friend bool operator==(const SiameseModel&, const SiameseModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Glorot-uniform weights in [-sqrt(6/(in+out)), +sqrt(6/(in+out))], zero bias.
SiameseModel init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                        std::size_t embedding_size, std::uint64_t seed);

// Forward pass; accumulation is done in double. Throws ShapeError on a
// length mismatch.
EmbeddingVector forward(const SiameseModel& model, std::span<const float> input);
std::vector<double> forward_exact(const SiameseModel& model, std::span<const float> input);

// max(|a - p|^2 - |a - n|^2 + margin, 0) with squared Euclidean distances.
double triplet_loss(std::span<const float> anchor, std::span<const float> positive,
                    std::span<const float> negative, double margin);
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

// Gradient buffers matching the model's parameter shapes.
struct Gradients {
  struct Layer {
    std::vector<double> weights;
    std::vector<double> bias;
  };
  std::vector<Layer> layers;

  static Gradients zeros_like(const SiameseModel& model);
  void set_zero();
  bool all_zero() const;
};

struct TripletGradient {
  double loss = 0.0;
  Gradients gradients;
};

// Exact gradient of the triplet loss with respect to every parameter: the
// three branch passes share weights, so their contributions are summed. The
// gradient is zero when the hinge is inactive (pre-hinge value <= 0).
TripletGradient backward(const SiameseModel& model, std::span<const float> anchor,
                         std::span<const float> positive, std::span<const float> negative,
                         double margin);

// Reusable scratch space for repeated gradient evaluation.
class GradientWorkspace {
 public:
  explicit GradientWorkspace(const SiameseModel& model);

  // Adds the triplet's gradient into `accumulator` and returns its loss.
  double accumulate(const SiameseModel& model, std::span<const float> anchor,
                    std::span<const float> positive, std::span<const float> negative,
                    double margin, Gradients& accumulator);

 private:
  struct Branch {
    std::vector<std::vector<double>> activations;  // [0] is the input
    std::vector<std::vector<double>> pre_activations;
  };
  void run(const SiameseModel& model, std::span<const float> input, Branch& branch);
  void backprop(const SiameseModel& model, const Branch& branch,
                std::span<const double> output_grad, Gradients& accumulator);

  Branch branches_[3];
  std::vector<double> delta_;
  std::vector<double> delta_prev_;
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Random triplets over class ids. Anchors are uniform over members of classes
// with at least two members; the positive is uniform over the anchor's other
// class members and the negative uniform over all other-class members.
// Throws SampleError with fewer than two classes or when no class can anchor.
std::vector<Triplet> sample_triplets(std::span<const std::size_t> classes, std::size_t count,
                                     Rng& rng);
std::vector<Triplet> sample_triplets(std::span<const Label> labels, std::size_t count,
                                     Rng& rng);

struct TrainConfig {
  std::size_t epochs = 450;
  double learning_rate = 1e-5;
  std::size_t batch_size = 8;  // triplets per update
  double margin = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_dims = {256};
  std::size_t embedding_size = 128;

  // Throws ConfigError on a non-positive field.
  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean triplet loss per epoch
  double wall_clock_seconds = 0.0;
  std::size_t triplets_seen = 0;
};

struct TrainResult {
  SiameseModel model;
  TrainLog log;
};

struct LabeledId {
  std::string id;
  Label label;
};

// Plain SGD: every epoch samples as many triplets as there are training
// examples and steps with the mean gradient of each batch. Deterministic for
// a fixed seed.
TrainResult train(const SiameseModel& model, const EmbeddingStore& store,
                  std::span<const LabeledId> labeled, const TrainConfig& config);
// Same on in-memory inputs; classes[i] is the class of inputs[i].
TrainResult train(const SiameseModel& model, std::span<const EmbeddingVector> inputs,
                  std::span<const std::size_t> classes, const TrainConfig& config);

// Checkpoint JSON: {"input_dim", "embedding_size", "layers": [{"w", "b",
// "act"}], "train_config": {...}} plus an optional "split" object recording
// how the training partition was drawn.
struct Checkpoint {
  SiameseModel model;
  TrainConfig config;
  std::optional<SplitSpec> split;
};

std::string to_json(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view json_text);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string to_json(const TrainLog& log);

}  // namespace flakysieve
