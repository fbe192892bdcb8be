#include <cmath>

#include "flakysieve/embed.hpp"
#include "flakysieve/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace flakysieve {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // full request path ending in /embed
};

Endpoint parse_endpoint(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || url.substr(0, scheme_end) != "http") {
    throw EmbedError("endpoint must be an http:// URL: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = std::string(url.substr(0, path_start));
  std::string base =
      path_start == std::string_view::npos ? std::string() : std::string(url.substr(path_start));
  while (!base.empty() && base.back() == '/') base.pop_back();
  if (base.size() >= 6 && base.compare(base.size() - 6, 6, "/embed") == 0) {
    e.path = base;
  } else {
    e.path = base + "/embed";
  }
  return e;
}

}  // namespace

std::vector<EmbeddingVector> remote_embed(std::span<const std::string> texts,
                                          std::string_view endpoint) {
  std::vector<EmbeddingVector> out;
  if (texts.empty()) return out;
  const auto target = parse_endpoint(endpoint);
  httplib::Client client(target.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(600);
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (std::size_t begin = 0; begin < texts.size(); begin += kRemoteBatchSize) {
    const std::size_t end = std::min(texts.size(), begin + kRemoteBatchSize);
    nlohmann::json request;
    request["texts"] = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) request["texts"].push_back(texts[i]);
    auto res = client.Post(target.path, request.dump(), "application/json");
    if (!res) {
      throw EmbedError("request to " + target.origin + target.path +
                       " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) throw EmbedError("status " + std::to_string(res->status));
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw EmbedError(std::string("malformed response: ") + e.what());
    }
    if (!body.is_object() || !body.contains("vectors") || !body["vectors"].is_array()) {
      throw EmbedError("malformed response: missing \"vectors\" array");
    }
    const auto& vectors = body["vectors"];
    if (vectors.size() != end - begin) {
      throw EmbedError("length mismatch: sent " + std::to_string(end - begin) +
                       " texts, received " + std::to_string(vectors.size()) + " vectors");
    }
    for (const auto& v : vectors) {
      if (!v.is_array() || v.empty()) throw EmbedError("malformed response: bad vector");
      std::vector<float> values;
      values.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) throw EmbedError("malformed response: non-numeric element");
        const auto f = static_cast<float>(x.get<double>());
        if (!std::isfinite(f)) throw EmbedError("malformed response: non-finite element");
        values.push_back(f);
      }
      if (dim == 0) dim = values.size();
      if (values.size() != dim) throw EmbedError("dimension mismatch");
      out.emplace_back(std::move(values));
    }
  }
  return out;
}

}  // namespace flakysieve
