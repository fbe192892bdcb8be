#include "flakysieve/embed.hpp"

#include <cmath>

#include "flakysieve/error.hpp"
#include "flakysieve/io.hpp"
#include "flakysieve/lexer.hpp"
#include "json.hpp"

namespace flakysieve {
namespace {

struct Span {
  std::size_t offset;
  std::size_t length;
};

// Significant lexer tokens (no whitespace/comments) with their byte spans.
// Falls back to whitespace-separated words when the source does not lex.
std::vector<Span> token_spans(std::string_view source) {
  std::vector<Span> spans;
  try {
    for (const auto& t : lex(source)) {
      if (t.kind == TokenKind::kWhitespace || t.kind == TokenKind::kComment) continue;
      spans.push_back({t.offset, t.text.size()});
    }
    return spans;
  } catch (const LexError&) {
    spans.clear();
  }
  std::size_t i = 0;
  while (i < source.size()) {
    while (i < source.size() && std::isspace(static_cast<unsigned char>(source[i]))) ++i;
    const std::size_t start = i;
    while (i < source.size() && !std::isspace(static_cast<unsigned char>(source[i]))) ++i;
    if (i > start) spans.push_back({start, i - start});
  }
  return spans;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

bool EmbeddingVector::all_finite() const {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void EmbeddingStore::insert(std::string id, EmbeddingVector vector) {
  if (id.empty()) throw LoadError("empty id");
  if (vector.dim() == 0) throw LoadError("empty vector for '" + id + "'");
  if (!vector.all_finite()) throw LoadError("non-finite value in vector for '" + id + "'");
  if (ids_.empty() && dim_ == 0) dim_ = vector.dim();
  if (vector.dim() != dim_) {
    throw LoadError("dimension mismatch for '" + id + "': expected " + std::to_string(dim_) +
                    ", got " + std::to_string(vector.dim()));
  }
  if (vectors_.contains(id)) throw LoadError("duplicate id '" + id + "'");
  vectors_.emplace(id, std::move(vector));
  ids_.push_back(std::move(id));
}

const EmbeddingVector* EmbeddingStore::find(std::string_view id) const {
  auto it = vectors_.find(id);
  return it == vectors_.end() ? nullptr : &it->second;
}

const EmbeddingVector& EmbeddingStore::at(std::string_view id) const {
  if (const auto* v = find(id)) return *v;
  throw EmbedError("missing embedding for '" + std::string(id) + "'");
}

EmbeddingStore parse_store(std::string_view jsonl) {
  EmbeddingStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
          !obj.contains("vec") || !obj["vec"].is_array()) {
        throw LoadError(where + "expected {\"id\": string, \"vec\": [numbers]}");
      }
      std::vector<float> values;
      values.reserve(obj["vec"].size());
      for (const auto& v : obj["vec"]) {
        if (!v.is_number()) throw LoadError(where + "non-numeric vector element");
        const auto f = static_cast<float>(v.get<double>());
        if (!std::isfinite(f)) throw LoadError(where + "non-finite vector element");
        values.push_back(f);
      }
      store.insert(obj["id"].get<std::string>(), EmbeddingVector(std::move(values)));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(where + "invalid JSON (" + e.what() + ")");
    } catch (const LoadError& e) {
      if (e.detail().rfind("line ", 0) == 0) throw;
      throw LoadError(where + e.detail());
    }
  }
  if (store.empty()) throw LoadError("embedding file has no records");
  return store;
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  return parse_store(read_file(path));
}

std::string to_jsonl(const EmbeddingStore& store) {
  std::string out;
  for (const auto& id : store.ids()) {
    out += "{\"id\": ";
    out += nlohmann::json(id).dump();
    out += ", \"vec\": [";
    const auto& values = store.at(id).values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out += ", ";
      out += format_float(values[i]);
    }
    out += "]}\n";
  }
  return out;
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(store));
}

std::vector<TokenRange> chunk(std::size_t token_count, const ChunkSpec& spec) {
  if (token_count == 0) throw ChunkError("no tokens to chunk");
  if (spec.max_tokens == 0) throw ChunkError("max_tokens must be positive");
  if (spec.overlap >= spec.max_tokens) throw ChunkError("overlap must be below max_tokens");
  const std::size_t stride = spec.max_tokens - spec.overlap;
  std::vector<TokenRange> ranges;
  for (std::size_t begin = 0;; begin += stride) {
    const std::size_t end = std::min(begin + spec.max_tokens, token_count);
    ranges.push_back({begin, end});
    if (end == token_count) break;
  }
  return ranges;
}

EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw EmbedError("nothing to pool");
  const std::size_t dim = vectors.front().dim();
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) throw EmbedError("dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v.values[i];
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = static_cast<float>(sum[i] / static_cast<double>(vectors.size()));
  }
  return EmbeddingVector(std::move(out));
}

HashingProvider::HashingProvider(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("hashing dimension must be positive");
}

std::vector<EmbeddingVector> HashingProvider::encode(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> acc(dim_, 0.0);
    auto add = [&](std::uint64_t h) {
      const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
      acc[h % dim_] += sign;
    };
    const auto spans = token_spans(text);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const auto token = std::string_view(text).substr(spans[i].offset, spans[i].length);
      const std::uint64_t h = fnv1a(token);
      add(h);
      if (i > 0) add(fnv1a(token, prev ^ 0x9e3779b97f4a7c15ULL));
      prev = h;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      values[i] = norm > 0.0 ? static_cast<float>(acc[i] / norm) : 0.0f;
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteProvider::encode(std::span<const std::string> texts) {
  return remote_embed(texts, endpoint_);
}

EmbeddingVector embed_test(const FlakyTest& test, EmbeddingProvider& provider,
                           const ChunkSpec& spec) {
  const auto spans = token_spans(test.source);
  std::vector<std::string> chunk_texts;
  if (spans.empty()) {
    chunk_texts.push_back(test.source);
  } else {
    std::vector<TokenRange> ranges;
    try {
      ranges = chunk(spans.size(), spec);
    } catch (const ChunkError& e) {
      throw EmbedError("test '" + test.id + "': " + e.detail());
    }
    for (const auto& r : ranges) {
      const std::size_t begin = spans[r.begin].offset;
      const std::size_t end = spans[r.end - 1].offset + spans[r.end - 1].length;
      chunk_texts.push_back(test.source.substr(begin, end - begin));
    }
  }
  std::vector<EmbeddingVector> vectors;
  try {
    vectors = provider.encode(chunk_texts);
  } catch (const EmbedError& e) {
    throw EmbedError("test '" + test.id + "': " + e.detail());
  } catch (const std::exception& e) {
    throw EmbedError("test '" + test.id + "': provider failure: " + e.what());
  }
  if (vectors.size() != chunk_texts.size()) {
    throw EmbedError("test '" + test.id + "': provider returned " +
                     std::to_string(vectors.size()) + " vectors for " +
                     std::to_string(chunk_texts.size()) + " chunks");
  }
  const std::size_t dim = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != dim || dim == 0) {
      throw EmbedError("test '" + test.id + "': dimension mismatch");
    }
    if (!v.all_finite()) throw EmbedError("test '" + test.id + "': non-finite vector");
  }
  if (vectors.size() == 1) return vectors.front();
  return mean_pool(vectors);
}

EmbeddingVector StoreEmbedder::embed(const FlakyTest& test) { return store_.at(test.id); }

EmbeddingVector ProviderEmbedder::embed(const FlakyTest& test) {
  return embed_test(test, provider_, spec_);
}

EmbeddingVector FallbackEmbedder::embed(const FlakyTest& test) {
  if (const auto* v = store_.find(test.id)) return *v;
  return provider_.embed(test);
}

EmbeddingStore embed_dataset(const Dataset& dataset, TestEmbedder& embedder) {
  EmbeddingStore store;
  for (const auto& t : dataset.tests()) {
    auto v = embedder.embed(t);
    try {
      store.insert(t.id, std::move(v));
    } catch (const LoadError& e) {
      throw EmbedError(e.detail());
    }
  }
  return store;
}

}  // namespace flakysieve
