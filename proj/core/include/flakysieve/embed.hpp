#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flakysieve/dataset.hpp"

namespace flakysieve {

// Fixed-dimension vector representing one test.
struct EmbeddingVector {
  std::vector<float> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> v) : values(std::move(v)) {}
  EmbeddingVector(std::initializer_list<float> v) : values(v) {}

  std::size_t dim() const { return values.size(); }
  bool all_finite() const;
  std::span<const float> span() const { return values; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// id -> vector map with a shared dimension. Insertion order is kept so a
// loaded file writes back in the same order.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  // Throws LoadError on a duplicate id, dimension mismatch or non-finite value.
  void insert(std::string id, EmbeddingVector vector);
  const EmbeddingVector* find(std::string_view id) const;
  const EmbeddingVector& at(std::string_view id) const;  // throws EmbedError
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::map<std::string, EmbeddingVector, std::less<>> vectors_;
};

// JSON Lines: {"id": "...", "vec": [...]} per line. Blank lines and lines
// starting with '#' are skipped. Throws LoadError with the line number.
EmbeddingStore parse_store(std::string_view jsonl);
EmbeddingStore load_store(const std::filesystem::path& path);
std::string to_jsonl(const EmbeddingStore& store);
void save_store(const EmbeddingStore& store, const std::filesystem::path& path);

struct ChunkSpec {
  std::size_t max_tokens = 512;
  std::size_t overlap = 0;
};

struct TokenRange {
  std::size_t begin;
  std::size_t end;  // exclusive

  std::size_t size() const { return end - begin; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// Windows of at most max_tokens with stride max_tokens - overlap. Throws
// ChunkError for zero tokens or an invalid spec.
std::vector<TokenRange> chunk(std::size_t token_count, const ChunkSpec& spec);

// Maps source texts to vectors. Implementations must be deterministic.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> encode(std::span<const std::string> texts) = 0;
};

// Local lexical encoder: signed feature hashing of the lexer's tokens and
// token bigrams, scaled to unit length. Useful offline and in tests; it is
// not a learned code model.
class HashingProvider : public EmbeddingProvider {
 public:
  explicit HashingProvider(std::size_t dim = 256);
  std::size_t dim() const { return dim_; }
  std::vector<EmbeddingVector> encode(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
};

// Client for the HTTP `/embed` protocol served by the embedding exporter.
class RemoteProvider : public EmbeddingProvider {
 public:
  explicit RemoteProvider(std::string endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<EmbeddingVector> encode(std::span<const std::string> texts) override;

 private:
  std::string endpoint_;
};

inline constexpr std::size_t kRemoteBatchSize = 32;

// POSTs texts to `<endpoint>/embed` in batches of at most 32 and returns one
// vector per text in input order. No request is sent for an empty input.
// Throws EmbedError on transport failure, non-200 status or a malformed
// response.
std::vector<EmbeddingVector> remote_embed(std::span<const std::string> texts,
                                          std::string_view endpoint);

// Splits the source into lexer-token windows, encodes each window's text and
// mean-pools the chunk vectors. Throws EmbedError on provider failure or
// inconsistent dimensions.
EmbeddingVector embed_test(const FlakyTest& test, EmbeddingProvider& provider,
                           const ChunkSpec& spec = {});

// Element-wise mean accumulated in double.
EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors);

// Where the pipeline gets a test's vector from.
class TestEmbedder {
 public:
  virtual ~TestEmbedder() = default;
  virtual EmbeddingVector embed(const FlakyTest& test) = 0;
};

// Looks tests up by id; throws EmbedError("missing embedding for <id>").
class StoreEmbedder : public TestEmbedder {
 public:
  explicit StoreEmbedder(const EmbeddingStore& store) : store_(store) {}
  EmbeddingVector embed(const FlakyTest& test) override;

 private:
  const EmbeddingStore& store_;
};

// Encodes the source through a provider with `embed_test`.
class ProviderEmbedder : public TestEmbedder {
 public:
  ProviderEmbedder(EmbeddingProvider& provider, ChunkSpec spec = {})
      : provider_(provider), spec_(spec) {}
  EmbeddingVector embed(const FlakyTest& test) override;

 private:
  EmbeddingProvider& provider_;
  ChunkSpec spec_;
};

// Store lookup first, provider for ids the store lacks.
class FallbackEmbedder : public TestEmbedder {
 public:
  FallbackEmbedder(const EmbeddingStore& store, EmbeddingProvider& provider,
                   ChunkSpec spec = {})
      : store_(store), provider_(provider, spec) {}
  EmbeddingVector embed(const FlakyTest& test) override;

 private:
  const EmbeddingStore& store_;
  ProviderEmbedder provider_;
};

// Embeds every test of a dataset into a new store (dataset order).
EmbeddingStore embed_dataset(const Dataset& dataset, TestEmbedder& embedder);

}  // namespace flakysieve
