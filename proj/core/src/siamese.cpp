#include "flakysieve/siamese.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "flakysieve/error.hpp"
#include "flakysieve/io.hpp"
#include "json.hpp"

namespace flakysieve {
namespace {

using Json = nlohmann::ordered_json;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void check_input(const SiameseModel& model, std::span<const float> input) {
  if (model.layers().empty()) throw ShapeError("model has no layers");
  if (input.size() != model.input_dim()) {
    throw ShapeError("input has " + std::to_string(input.size()) + " values, model expects " +
                     std::to_string(model.input_dim()));
  }
}

}  // namespace

SiameseModel::SiameseModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    if (layer.in_dim == 0 || layer.out_dim == 0) throw ConfigError(where + "zero dimension");
    if (layer.weights.size() != layer.in_dim * layer.out_dim ||
        layer.bias.size() != layer.out_dim) {
      throw ConfigError(where + "parameter sizes do not match its dimensions");
    }
    if (l > 0 && layers_[l - 1].out_dim != layer.in_dim) {
      throw ConfigError(where + "input dimension does not match previous layer output");
    }
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw ConfigError(where + "non-finite parameter");
    }
  }
  if (layers_.back().activation != Activation::kIdentity) {
    throw ConfigError("output layer must be linear");
  }
}

std::size_t SiameseModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

SiameseModel init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                        std::size_t embedding_size, std::uint64_t seed) {
  if (input_dim == 0 || embedding_size == 0 ||
      std::find(hidden_dims.begin(), hidden_dims.end(), 0) != hidden_dims.end()) {
    throw ConfigError("layer dimensions must be positive");
  }
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(embedding_size);

  Rng rng(derive_seed(seed, "init_model"));
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in_dim = dims[l];
    layer.out_dim = dims[l + 1];
    layer.activation = l + 2 == dims.size() ? Activation::kIdentity : Activation::kRelu;
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
    layer.weights.resize(layer.in_dim * layer.out_dim);
    for (auto& w : layer.weights) w = static_cast<float>(rng.uniform(-limit, limit));
    layer.bias.assign(layer.out_dim, 0.0f);
    layers.push_back(std::move(layer));
  }
  return SiameseModel(std::move(layers));
}

std::vector<double> forward_exact(const SiameseModel& model, std::span<const float> input) {
  check_input(model, input);
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& layer : model.layers()) {
    next.assign(layer.out_dim, 0.0);
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      const float* row = layer.weights.data() + o * layer.in_dim;
      double sum = layer.bias[o];
      for (std::size_t i = 0; i < layer.in_dim; ++i) sum += static_cast<double>(row[i]) * current[i];
      next[o] = layer.activation == Activation::kRelu ? std::max(sum, 0.0) : sum;
    }
    current.swap(next);
  }
  return current;
}

EmbeddingVector forward(const SiameseModel& model, std::span<const float> input) {
  const auto exact = forward_exact(model, input);
  return EmbeddingVector(std::vector<float>(exact.begin(), exact.end()));
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw ShapeError("triplet members differ in dimension");
  }
  const double value =
      squared_distance(anchor, positive) - squared_distance(anchor, negative) + margin;
  return std::max(value, 0.0);
}

double triplet_loss(std::span<const float> anchor, std::span<const float> positive,
                    std::span<const float> negative, double margin) {
  const std::vector<double> a(anchor.begin(), anchor.end());
  const std::vector<double> p(positive.begin(), positive.end());
  const std::vector<double> n(negative.begin(), negative.end());
  return triplet_loss(a, p, n, margin);
}

Gradients Gradients::zeros_like(const SiameseModel& model) {
  Gradients g;
  for (const auto& layer : model.layers()) {
    g.layers.push_back({std::vector<double>(layer.weights.size(), 0.0),
                        std::vector<double>(layer.bias.size(), 0.0)});
  }
  return g;
}

void Gradients::set_zero() {
  for (auto& layer : layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

bool Gradients::all_zero() const {
  auto zero = [](double v) { return v == 0.0; };
  return std::all_of(layers.begin(), layers.end(), [&](const Layer& l) {
    return std::all_of(l.weights.begin(), l.weights.end(), zero) &&
           std::all_of(l.bias.begin(), l.bias.end(), zero);
  });
}

GradientWorkspace::GradientWorkspace(const SiameseModel& model) {
  for (auto& branch : branches_) {
    branch.activations.emplace_back(model.input_dim());
    for (const auto& layer : model.layers()) {
      branch.pre_activations.emplace_back(layer.out_dim);
      branch.activations.emplace_back(layer.out_dim);
    }
  }
}

void GradientWorkspace::run(const SiameseModel& model, std::span<const float> input,
                            Branch& branch) {
  check_input(model, input);
  std::copy(input.begin(), input.end(), branch.activations[0].begin());
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = branch.activations[l];
    auto& z = branch.pre_activations[l];
    auto& out = branch.activations[l + 1];
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      const float* row = layer.weights.data() + o * layer.in_dim;
      double sum = layer.bias[o];
      for (std::size_t i = 0; i < layer.in_dim; ++i) sum += static_cast<double>(row[i]) * in[i];
      z[o] = sum;
      out[o] = layer.activation == Activation::kRelu ? std::max(sum, 0.0) : sum;
    }
  }
}

void GradientWorkspace::backprop(const SiameseModel& model, const Branch& branch,
                                 std::span<const double> output_grad, Gradients& accumulator) {
  const auto& layers = model.layers();
  delta_.assign(output_grad.begin(), output_grad.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& z = branch.pre_activations[l];
    if (layer.activation == Activation::kRelu) {
      for (std::size_t o = 0; o < layer.out_dim; ++o) {
        if (!(z[o] > 0.0)) delta_[o] = 0.0;
      }
    }
    const auto& in = branch.activations[l];
    auto& grad = accumulator.layers[l];
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      const double d = delta_[o];
      if (d == 0.0) continue;
      double* row = grad.weights.data() + o * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) row[i] += d * in[i];
      grad.bias[o] += d;
    }
    if (l == 0) break;
    delta_prev_.assign(layer.in_dim, 0.0);
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      const double d = delta_[o];
      if (d == 0.0) continue;
      const float* row = layer.weights.data() + o * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) delta_prev_[i] += static_cast<double>(row[i]) * d;
    }
    delta_.swap(delta_prev_);
  }
}

double GradientWorkspace::accumulate(const SiameseModel& model, std::span<const float> anchor,
                                     std::span<const float> positive,
                                     std::span<const float> negative, double margin,
                                     Gradients& accumulator) {
  run(model, anchor, branches_[0]);
  run(model, positive, branches_[1]);
  run(model, negative, branches_[2]);
  const auto& fa = branches_[0].activations.back();
  const auto& fp = branches_[1].activations.back();
  const auto& fn = branches_[2].activations.back();
  const double value = squared_distance(fa, fp) - squared_distance(fa, fn) + margin;
  if (!(value > 0.0)) return 0.0;

  // d/dfa = 2(fn - fp), d/dfp = 2(fp - fa), d/dfn = 2(fa - fn)
  const std::size_t dim = fa.size();
  std::vector<double> ga(dim), gp(dim), gn(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    ga[i] = 2.0 * (fn[i] - fp[i]);
    gp[i] = 2.0 * (fp[i] - fa[i]);
    gn[i] = 2.0 * (fa[i] - fn[i]);
  }
  backprop(model, branches_[0], ga, accumulator);
  backprop(model, branches_[1], gp, accumulator);
  backprop(model, branches_[2], gn, accumulator);
  return value;
}

TripletGradient backward(const SiameseModel& model, std::span<const float> anchor,
                         std::span<const float> positive, std::span<const float> negative,
                         double margin) {
  TripletGradient result{0.0, Gradients::zeros_like(model)};
  GradientWorkspace workspace(model);
  result.loss = workspace.accumulate(model, anchor, positive, negative, margin, result.gradients);
  return result;
}

std::vector<Triplet> sample_triplets(std::span<const std::size_t> classes, std::size_t count,
                                     Rng& rng) {
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < classes.size(); ++i) members[classes[i]].push_back(i);
  if (members.size() < 2) throw SampleError("triplets need at least two classes");

  std::vector<std::size_t> anchors;
  std::vector<std::size_t> position(classes.size());
  std::map<std::size_t, std::vector<std::size_t>> others;
  for (const auto& [cls, idx] : members) {
    for (std::size_t k = 0; k < idx.size(); ++k) position[idx[k]] = k;
    if (idx.size() < 2) continue;
    auto& rest = others[cls];
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] != cls) rest.push_back(i);
    }
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (members[classes[i]].size() >= 2) anchors.push_back(i);
  }
  if (anchors.empty()) throw SampleError("no class has two members to anchor a triplet");

  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t a = anchors[rng.index(anchors.size())];
    const auto& same = members[classes[a]];
    std::size_t k = rng.index(same.size() - 1);
    if (k >= position[a]) ++k;
    const auto& rest = others[classes[a]];
    out.push_back({a, same[k], rest[rng.index(rest.size())]});
  }
  return out;
}

std::vector<Triplet> sample_triplets(std::span<const Label> labels, std::size_t count,
                                     Rng& rng) {
  std::map<Label, std::size_t> ids;
  for (Label l : labels) ids.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, id] : ids) id = next++;
  std::vector<std::size_t> classes;
  classes.reserve(labels.size());
  for (Label l : labels) classes.push_back(ids[l]);
  return sample_triplets(classes, count, rng);
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a non-negative finite number");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be positive");
  if (embedding_size == 0) throw ConfigError("embedding size must be positive");
  if (std::find(hidden_dims.begin(), hidden_dims.end(), 0) != hidden_dims.end()) {
    throw ConfigError("hidden dimensions must be positive");
  }
}

TrainResult train(const SiameseModel& model, std::span<const EmbeddingVector> inputs,
                  std::span<const std::size_t> classes, const TrainConfig& config) {
  config.validate();
  if (inputs.size() != classes.size()) throw TrainError("inputs and classes differ in length");
  if (inputs.empty()) throw TrainError("no training examples");
  for (const auto& x : inputs) {
    if (x.dim() != model.input_dim()) {
      throw ShapeError("embedding dimension " + std::to_string(x.dim()) +
                       " does not match model input " + std::to_string(model.input_dim()));
    }
  }

  TrainResult result{model, {}};
  auto& params = result.model.mutable_layers();
  Gradients grads = Gradients::zeros_like(model);
  GradientWorkspace workspace(model);
  Rng rng(derive_seed(config.seed, "triplets"));
  const std::size_t per_epoch = inputs.size();

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto triplets = sample_triplets(classes, per_epoch, rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < triplets.size(); begin += config.batch_size) {
      const std::size_t end = std::min(triplets.size(), begin + config.batch_size);
      grads.set_zero();
      for (std::size_t t = begin; t < end; ++t) {
        const auto& tr = triplets[t];
        epoch_loss += workspace.accumulate(result.model, inputs[tr.anchor].span(),
                                           inputs[tr.positive].span(),
                                           inputs[tr.negative].span(), config.margin, grads);
      }
      const double step = config.learning_rate / static_cast<double>(end - begin);
      for (std::size_t l = 0; l < params.size(); ++l) {
        auto& layer = params[l];
        const auto& g = grads.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
          layer.weights[i] = static_cast<float>(layer.weights[i] - step * g.weights[i]);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
          layer.bias[i] = static_cast<float>(layer.bias[i] - step * g.bias[i]);
        }
      }
    }
    result.log.epoch_loss.push_back(epoch_loss / static_cast<double>(triplets.size()));
    result.log.triplets_seen += triplets.size();
  }
  result.log.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train(const SiameseModel& model, const EmbeddingStore& store,
                  std::span<const LabeledId> labeled, const TrainConfig& config) {
  std::vector<EmbeddingVector> inputs;
  std::vector<Label> labels;
  inputs.reserve(labeled.size());
  for (const auto& item : labeled) {
    const auto* v = store.find(item.id);
    if (v == nullptr) throw TrainError("missing embedding for '" + item.id + "'");
    inputs.push_back(*v);
    labels.push_back(item.label);
  }
  std::map<Label, std::size_t> ids;
  for (Label l : labels) ids.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, id] : ids) id = next++;
  std::vector<std::size_t> classes;
  for (Label l : labels) classes.push_back(ids[l]);
  return train(model, inputs, classes, config);
}

namespace {

Json config_to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["margin"] = c.margin;
  j["seed"] = c.seed;
  j["hidden_dims"] = c.hidden_dims;
  j["embedding_size"] = c.embedding_size;
  return j;
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.margin = j.value("margin", c.margin);
  c.seed = j.value("seed", c.seed);
  if (j.contains("hidden_dims")) c.hidden_dims = j["hidden_dims"].get<std::vector<std::size_t>>();
  c.embedding_size = j.value("embedding_size", c.embedding_size);
  return c;
}

}  // namespace

std::string to_json(const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  Json j;
  j["input_dim"] = model.input_dim();
  j["embedding_size"] = model.embedding_size();
  j["layers"] = Json::array();
  for (const auto& layer : model.layers()) {
    Json l;
    Json rows = Json::array();
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      Json row = Json::array();
      for (std::size_t i = 0; i < layer.in_dim; ++i) row.push_back(static_cast<double>(layer.weight(o, i)));
      rows.push_back(std::move(row));
    }
    l["w"] = std::move(rows);
    Json bias = Json::array();
    for (float b : layer.bias) bias.push_back(static_cast<double>(b));
    l["b"] = std::move(bias);
    l["act"] = layer.activation == Activation::kRelu ? "relu" : "id";
    j["layers"].push_back(std::move(l));
  }
  j["train_config"] = config_to_json(checkpoint.config);
  if (checkpoint.split) {
    j["split"] = {{"train_ratio", checkpoint.split->train_ratio},
                  {"seed", checkpoint.split->seed},
                  {"group_by_project", checkpoint.split->group_by_project}};
  }
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw LoadError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
      DenseLayer layer;
      const auto& rows = l.at("w");
      layer.out_dim = rows.size();
      layer.in_dim = rows.empty() ? 0 : rows.at(0).size();
      for (const auto& row : rows) {
        if (row.size() != layer.in_dim) throw LoadError("ragged weight matrix");
        for (const auto& w : row) layer.weights.push_back(static_cast<float>(w.get<double>()));
      }
      for (const auto& b : l.at("b")) layer.bias.push_back(static_cast<float>(b.get<double>()));
      const auto act = l.at("act").get<std::string>();
      if (act == "relu") {
        layer.activation = Activation::kRelu;
      } else if (act == "id") {
        layer.activation = Activation::kIdentity;
      } else {
        throw LoadError("unknown activation '" + act + "'");
      }
      layers.push_back(std::move(layer));
    }
    Checkpoint checkpoint;
    checkpoint.model = SiameseModel(std::move(layers));
    if (j.at("input_dim").get<std::size_t>() != checkpoint.model.input_dim() ||
        j.at("embedding_size").get<std::size_t>() != checkpoint.model.embedding_size()) {
      throw LoadError("declared dimensions do not match the layers");
    }
    if (j.contains("train_config")) checkpoint.config = config_from_json(j["train_config"]);
    if (j.contains("split")) {
      const auto& s = j["split"];
      checkpoint.split = SplitSpec{s.value("train_ratio", 0.8), s.value("seed", std::uint64_t{0}),
                                   s.value("group_by_project", false)};
    }
    return checkpoint;
  } catch (const Json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError("malformed checkpoint: " + e.detail());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

std::string to_json(const TrainLog& log) {
  Json j;
  j["epoch_loss"] = log.epoch_loss;
  j["wall_clock_seconds"] = log.wall_clock_seconds;
  j["triplets_seen"] = log.triplets_seen;
  return j.dump(1) + "\n";
}

}  // namespace flakysieve
