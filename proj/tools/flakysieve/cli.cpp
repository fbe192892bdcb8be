#include "flakysieve/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "flakysieve/augment.hpp"
#include "flakysieve/dataset.hpp"
#include "flakysieve/embed.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/evaluate.hpp"
#include "flakysieve/io.hpp"
#include "flakysieve/report.hpp"
#include "flakysieve/siamese.hpp"
#include "flakysieve/version.hpp"
#include "json.hpp"

namespace flakysieve::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Options {
  std::string input;
  std::string out;
  std::string taxonomy;
  std::string store;
  std::string endpoint;
  std::string checkpoint;
  std::string train_log;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> target_total;
  std::size_t epochs = 450;
  double lr = 1e-5;
  std::size_t batch = 8;
  double margin = 1.0;
  std::size_t embedding_size = 128;
  std::string hidden_dims = "256";
  double train_ratio = 0.8;
  bool per_project = false;
  bool augment = false;
  std::string augment_mode = "mutation";
  double jitter_sigma = 0.1;
  std::size_t hash_dim = 256;
  std::size_t max_tokens = 512;
  std::size_t overlap = 0;
  std::size_t min_support = 0;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("FLAKYSIEVE_SEED")) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("FLAKYSIEVE_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

std::vector<std::size_t> parse_hidden_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  if (text.empty() || text == "none") return dims;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const auto item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const auto value = std::stoull(item, &used);
      if (used != item.size() || value == 0) throw std::invalid_argument(item);
      dims.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError("--hidden-dims expects comma-separated positive integers, got '" +
                        text + "'");
    }
    pos = comma + 1;
  }
  return dims;
}

Taxonomy resolve_taxonomy(const Options& o, const std::string& csv_text) {
  if (!o.taxonomy.empty()) {
    auto t = parse_taxonomy(o.taxonomy);
    if (!t) throw ConfigError("unknown taxonomy '" + o.taxonomy + "' (detection|idoft|flakycat)");
    return *t;
  }
  return detect_taxonomy(csv_text);
}

Dataset read_dataset(const Options& o) {
  const auto text = read_file(o.input);
  return parse_dataset(text, resolve_taxonomy(o, text));
}

TrainConfig train_config(const Options& o, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.learning_rate = o.lr;
  c.batch_size = o.batch;
  c.margin = o.margin;
  c.seed = seed;
  c.hidden_dims = parse_hidden_dims(o.hidden_dims);
  c.embedding_size = o.embedding_size;
  c.validate();
  return c;
}

ChunkSpec chunk_spec(const Options& o) {
  if (o.max_tokens == 0 || o.overlap >= o.max_tokens) {
    throw ConfigError("--overlap must be below --max-tokens, which must be positive");
  }
  return {o.max_tokens, o.overlap};
}

// Owns whatever the embedder refers to.
struct EmbedderSetup {
  std::optional<EmbeddingStore> store;
  std::unique_ptr<EmbeddingProvider> provider;
  std::unique_ptr<TestEmbedder> embedder;
  std::string description;
};

void make_embedder(const Options& o, EmbedderSetup& setup) {
  if (!o.store.empty()) setup.store = load_store(o.store);
  if (!o.endpoint.empty()) {
    setup.provider = std::make_unique<RemoteProvider>(o.endpoint);
  } else if (!setup.store) {
    setup.provider = std::make_unique<HashingProvider>(o.hash_dim);
  }
  const auto spec = chunk_spec(o);
  if (setup.store && setup.provider) {
    setup.embedder = std::make_unique<FallbackEmbedder>(*setup.store, *setup.provider, spec);
    setup.description = "store+remote";
  } else if (setup.store) {
    setup.embedder = std::make_unique<StoreEmbedder>(*setup.store);
    setup.description = "store";
  } else {
    setup.embedder = std::make_unique<ProviderEmbedder>(*setup.provider, spec);
    setup.description = o.endpoint.empty() ? "hashing" : "remote";
  }
}

Json split_json(const SplitSpec& s) {
  return {{"train_ratio", s.train_ratio}, {"seed", s.seed}, {"group_by_project", s.group_by_project}};
}

Json train_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},       {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size}, {"margin", c.margin},
          {"seed", c.seed},           {"hidden_dims", c.hidden_dims},
          {"embedding_size", c.embedding_size}};
}

// Run manifest written next to the primary output of every command.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv)
      : started_(utc_now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = argv;
    doc_["tool_version"] = kVersion;
    doc_["config"] = Json::object();
    doc_["inputs"] = Json::array();
    doc_["outputs"] = Json::array();
  }

  Json& config() { return doc_["config"]; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const std::string& path) {
    if (!path.empty()) doc_["inputs"].push_back(path);
  }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }
  void timing(const std::string& key, double seconds) { doc_["timing"][key] = seconds; }

  void write(const fs::path& primary_output) {
    doc_["started_at"] = started_;
    doc_["finished_at"] = utc_now();
    auto path = primary_output;
    path += ".manifest.json";
    write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  Json doc_;
  std::string started_;
};

std::string markdown_path(const std::string& json_out) {
  fs::path p(json_out);
  if (p.extension() == ".json") return p.replace_extension(".md").string();
  return json_out + ".md";
}

int cmd_ingest(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("ingest", argv);
  if (o.taxonomy.empty()) throw ConfigError("ingest requires --taxonomy");
  auto dataset = read_dataset(o);
  if (o.min_support > 0) {
    dataset = filter_min_category_support(dataset, o.min_support, o.per_project);
  }
  save_dataset(dataset, o.out);
  manifest.config() = {{"taxonomy", to_string(dataset.taxonomy())},
                       {"min_support", o.min_support},
                       {"group_by_project", o.per_project}};
  manifest.input(o.input);
  manifest.output(o.out);
  manifest.write(o.out);
  out << "ingested " << dataset.size() << " tests (" << to_string(dataset.taxonomy()) << ")\n";
  for (const auto& [label, count] : dataset.class_counts()) {
    out << "  " << label.token() << ": " << count << "\n";
  }
  return kExitOk;
}

int cmd_augment(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("augment", argv);
  const auto seed = resolve_seed(o);
  if (!o.target_total) throw ConfigError("augment requires --target-total");
  const auto dataset = read_dataset(o);
  const auto augmented = augment_dataset(dataset, *o.target_total, seed);
  save_augmented(augmented, o.out);
  manifest.seed(seed);
  manifest.config() = {{"taxonomy", to_string(dataset.taxonomy())},
                       {"target_total", *o.target_total}};
  manifest.input(o.input);
  manifest.output(o.out);
  manifest.write(o.out);
  out << "wrote " << augmented.size() << " rows (" << augmented.variants.size()
      << " variants) to " << o.out << "\n";
  return kExitOk;
}

int cmd_embed(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("embed", argv);
  const auto dataset = read_dataset(o);
  Options provider_only = o;
  provider_only.store.clear();
  EmbedderSetup setup;
  make_embedder(provider_only, setup);
  const auto start = std::chrono::steady_clock::now();
  EmbeddingStore store;
  try {
    store = embed_dataset(dataset, *setup.embedder);
  } catch (const Error& e) {
    throw e.with_stage("embed");
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_store(store, o.out);
  manifest.config() = {{"provider", setup.description},
                       {"endpoint", o.endpoint},
                       {"hash_dim", o.hash_dim},
                       {"max_tokens", o.max_tokens},
                       {"overlap", o.overlap}};
  manifest.timing("embed_seconds", seconds);
  manifest.input(o.input);
  manifest.output(o.out);
  manifest.write(o.out);
  out << "embedded " << store.size() << " tests (dim " << store.dim() << ") to " << o.out << "\n";
  return kExitOk;
}

Dataset augmented_train(const Dataset& train, const Options& o, std::uint64_t seed) {
  const std::size_t target =
      o.target_total ? std::max(*o.target_total, train.size())
                     : static_cast<std::size_t>(
                           std::llround(static_cast<double>(train.size()) * 639.0 / 369.0));
  try {
    return augment_dataset(train, target, seed).combined();
  } catch (const Error& e) {
    throw e.with_stage("augment");
  }
}

int cmd_train(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("train", argv);
  const auto seed = resolve_seed(o);
  const auto config = train_config(o, seed);
  const auto dataset = read_dataset(o);
  EmbedderSetup setup;
  make_embedder(o, setup);

  const SplitSpec split_spec{o.train_ratio, seed, o.per_project};
  Split split = [&] {
    try {
      return stratified_split(dataset, split_spec);
    } catch (const Error& e) {
      throw e.with_stage("split");
    }
  }();
  Dataset train_set = o.augment ? augmented_train(split.train, o, seed) : split.train;

  const auto embed_start = std::chrono::steady_clock::now();
  EmbeddingStore vectors;
  try {
    vectors = embed_dataset(train_set, *setup.embedder);
  } catch (const Error& e) {
    throw e.with_stage("embed");
  }
  const double embed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - embed_start).count();

  std::vector<LabeledId> labeled;
  for (const auto& t : train_set.tests()) labeled.push_back({t.id, t.label});
  TrainResult result;
  try {
    const auto initial = init_model(vectors.dim(), config.hidden_dims, config.embedding_size, seed);
    result = train(initial, vectors, labeled, config);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw e.with_stage("train");
  }

  save_checkpoint({result.model, config, split_spec}, o.out);
  auto log_path = fs::path(o.out);
  log_path += ".trainlog.json";
  write_file_atomic(log_path, to_json(result.log));

  manifest.seed(seed);
  manifest.config() = {{"train", train_json(config)},
                       {"split", split_json(split_spec)},
                       {"augment", o.augment},
                       {"provider", setup.description},
                       {"train_size", train_set.size()}};
  manifest.timing("embed_seconds", embed_seconds);
  manifest.timing("train_seconds", result.log.wall_clock_seconds);
  manifest.input(o.input);
  manifest.input(o.store);
  manifest.output(o.out);
  manifest.output(log_path.string());
  manifest.write(o.out);
  out << "trained on " << train_set.size() << " tests for " << config.epochs << " epochs ("
      << result.log.wall_clock_seconds << " s); final loss "
      << (result.log.epoch_loss.empty() ? 0.0 : result.log.epoch_loss.back()) << "\n";
  return kExitOk;
}

double read_train_seconds(const fs::path& path) {
  try {
    return Json::parse(read_file(path)).at("wall_clock_seconds").get<double>();
  } catch (const Json::exception& e) {
    throw LoadError("malformed train log " + path.string() + ": " + e.what());
  }
}

int cmd_eval(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv,
             std::ostream& out) {
  Manifest manifest("eval", argv);
  const auto seed = resolve_seed(o);
  const auto dataset = read_dataset(o);
  EmbedderSetup setup;
  make_embedder(o, setup);

  std::string json;
  std::string markdown;
  double embed_seconds = 0.0;
  if (!o.checkpoint.empty()) {
    const auto checkpoint = load_checkpoint(o.checkpoint);
    SplitSpec spec = checkpoint.split.value_or(SplitSpec{o.train_ratio, seed, o.per_project});
    if (sub.count("--train-ratio") > 0) spec.train_ratio = o.train_ratio;
    if (sub.count("--seed") > 0 || (!checkpoint.split && !o.seed)) spec.seed = seed;
    if (sub.count("--per-project") > 0) spec.group_by_project = o.per_project;
    const auto split = [&] {
      try {
        return stratified_split(dataset, spec);
      } catch (const Error& e) {
        throw e.with_stage("split");
      }
    }();
    auto report = evaluate_split(checkpoint.model, split.train, split.test, *setup.embedder);
    embed_seconds = report.embed_seconds;
    fs::path log_path = o.train_log;
    if (log_path.empty()) {
      log_path = o.checkpoint;
      log_path += ".trainlog.json";
      if (!fs::exists(log_path)) log_path.clear();
    }
    report.train_seconds = log_path.empty() ? 0.0 : read_train_seconds(log_path);
    report.seed = spec.seed;
    json = report_to_json(report, dataset.taxonomy());
    manifest.config() = {{"mode", "checkpoint"}, {"split", split_json(spec)},
                         {"provider", setup.description}};
    manifest.input(o.checkpoint);
    if (!log_path.empty()) manifest.input(log_path.string());
  } else {
    ExperimentConfig config;
    config.split = {o.train_ratio, seed, o.per_project};
    config.train = train_config(o, seed);
    config.per_project = o.per_project;
    if (o.augment) {
      if (o.augment_mode == "mutation") {
        config.augmentation.mode = AugmentMode::kTokenMutation;
      } else if (o.augment_mode == "jitter") {
        config.augmentation.mode = AugmentMode::kEmbeddingJitter;
      } else {
        throw ConfigError("--augment-mode must be mutation or jitter");
      }
      config.augmentation.target_total = o.target_total.value_or(0);
      config.augmentation.jitter_sigma = o.jitter_sigma;
    }
    const auto result = run_experiment(dataset, *setup.embedder, config);
    embed_seconds = result.total.embed_seconds;
    json = report_to_json(result, dataset.taxonomy());
    manifest.config() = {{"mode", "end_to_end"},
                         {"split", split_json(config.split)},
                         {"train", train_json(config.train)},
                         {"augment", o.augment ? o.augment_mode : "none"},
                         {"per_project", o.per_project},
                         {"provider", setup.description}};
    manifest.timing("train_seconds", result.total.train_seconds);
  }
  markdown = markdown_from_report_json(json);
  const auto md_path = markdown_path(o.out);
  write_file_atomic(o.out, json);
  write_file_atomic(md_path, markdown);
  manifest.seed(seed);
  manifest.timing("embed_seconds", embed_seconds);
  manifest.input(o.input);
  manifest.input(o.store);
  manifest.output(o.out);
  manifest.output(md_path);
  manifest.write(o.out);
  out << markdown;
  return kExitOk;
}

int cmd_report(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("report", argv);
  const auto markdown = markdown_from_report_json(read_file(o.input));
  const std::string target = o.out.empty() ? markdown_path(o.input) : o.out;
  write_file_atomic(target, markdown);
  manifest.input(o.input);
  manifest.output(target);
  manifest.write(target);
  out << markdown;
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kLoad:
    case ErrorKind::kLex:
      return kExitInput;
    case ErrorKind::kConfig:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Few-shot flaky test classification with a Siamese encoder", "flakysieve"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed (falls back to $FLAKYSIEVE_SEED, then 0)");
  };
  auto dataset_opts = [&](CLI::App* sub, bool taxonomy_required) {
    sub->add_option("--input", o.input, "Dataset CSV (id,project,label,source)")->required();
    auto* t = sub->add_option("--taxonomy", o.taxonomy, "detection | idoft | flakycat");
    if (taxonomy_required) t->required();
  };
  auto embed_opts = [&](CLI::App* sub) {
    sub->add_option("--store", o.store, "Embedding JSONL file");
    sub->add_option("--endpoint", o.endpoint, "Embedding service URL (POST <url>/embed)");
    sub->add_option("--hash-dim", o.hash_dim, "Dimension of the built-in hashing encoder");
    sub->add_option("--max-tokens", o.max_tokens, "Tokens per chunk");
    sub->add_option("--overlap", o.overlap, "Tokens shared by consecutive chunks");
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--epochs", o.epochs, "Training epochs");
    sub->add_option("--lr", o.lr, "SGD learning rate");
    sub->add_option("--batch", o.batch, "Triplets per update");
    sub->add_option("--margin", o.margin, "Triplet-loss margin");
    sub->add_option("--embedding-size", o.embedding_size, "Output dimension");
    sub->add_option("--hidden-dims", o.hidden_dims, "Comma-separated hidden widths, or none");
    sub->add_option("--train-ratio", o.train_ratio, "Stratified train fraction");
    sub->add_flag("--per-project", o.per_project, "Split (and evaluate) each project separately");
    sub->add_flag("--augment", o.augment, "Augment the train partition");
    sub->add_option("--target-total", o.target_total, "Train partition size after augmentation");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate and normalise a dataset CSV");
  dataset_opts(ingest, true);
  ingest->add_option("--out", o.out, "Normalised CSV")->required();
  ingest->add_option("--min-support", o.min_support, "Drop classes with fewer members");
  ingest->add_flag("--per-project", o.per_project, "Count --min-support per project");

  auto* augment = app.add_subcommand("augment", "Add unique mutated variants");
  dataset_opts(augment, false);
  augment->add_option("--out", o.out, "Augmented CSV")->required();
  augment->add_option("--target-total", o.target_total, "Rows in the output")->required();
  seed_opt(augment);

  auto* embed = app.add_subcommand("embed", "Write an embedding JSONL file for a dataset");
  dataset_opts(embed, false);
  embed->add_option("--out", o.out, "Embedding JSONL")->required();
  embed->add_option("--endpoint", o.endpoint, "Embedding service URL (POST <url>/embed)");
  embed->add_option("--hash-dim", o.hash_dim, "Dimension of the built-in hashing encoder");
  embed->add_option("--max-tokens", o.max_tokens, "Tokens per chunk");
  embed->add_option("--overlap", o.overlap, "Tokens shared by consecutive chunks");

  auto* train_cmd = app.add_subcommand("train", "Train the Siamese encoder");
  dataset_opts(train_cmd, false);
  train_cmd->add_option("--out", o.out, "Checkpoint JSON")->required();
  embed_opts(train_cmd);
  model_opts(train_cmd);
  seed_opt(train_cmd);

  auto* eval = app.add_subcommand("eval", "Evaluate with nearest-centroid classification");
  dataset_opts(eval, false);
  eval->add_option("--out", o.out, "Report JSON (Markdown goes next to it)")->required();
  eval->add_option("--checkpoint", o.checkpoint, "Trained checkpoint; omit to train in-process");
  eval->add_option("--train-log", o.train_log, "Train log supplying train_seconds");
  eval->add_option("--augment-mode", o.augment_mode, "mutation | jitter");
  eval->add_option("--jitter-sigma", o.jitter_sigma, "Noise scale for jitter augmentation");
  embed_opts(eval);
  model_opts(eval);
  seed_opt(eval);

  auto* report = app.add_subcommand("report", "Render a report JSON as Markdown");
  report->add_option("--input", o.input, "Report JSON")->required();
  report->add_option("--out", o.out, "Markdown output (default: <input>.md)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, args, out);
    if (augment->parsed()) return cmd_augment(o, args, out);
    if (embed->parsed()) return cmd_embed(o, args, out);
    if (train_cmd->parsed()) return cmd_train(o, args, out);
    if (eval->parsed()) return cmd_eval(o, *eval, args, out);
    if (report->parsed()) return cmd_report(o, args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace flakysieve::cli
