#include "flakysieve/label.hpp"

#include <array>

namespace flakysieve {
namespace {

struct LabelInfo {
  std::string_view token;
  std::string_view display;
};

constexpr std::array<LabelInfo, 2> kDetectionInfo = {{
    {"flaky", "Flaky"},
    {"non_flaky", "Non-Flaky"},
}};

constexpr std::array<LabelInfo, 6> kIdoftInfo = {{
    {"NDOD", "Non-deterministic-order-dependent (NDOD)"},
    {"NOD", "Non-order-dependent (NOD)"},
    {"OD", "Order-dependent (OD)"},
    {"NIO", "Non-idempotent-outcome (NIO)"},
    {"ID", "Implementation-dependent (ID)"},
    {"UD", "Unknown-dependency (UD)"},
}};

constexpr std::array<LabelInfo, 5> kFlakyCatInfo = {{
    {"async_wait", "Async wait"},
    {"concurrency", "Concurrency"},
    {"time", "Time"},
    {"order_dependency", "Test order dependency"},
    {"unordered_collections", "Unordered collections"},
}};

constexpr std::array<Label, 2> kDetectionLabels = {DetectionLabel::kFlaky,
                                                   DetectionLabel::kNonFlaky};
constexpr std::array<Label, 6> kIdoftLabels = {
    IdoftCategory::kNDOD, IdoftCategory::kNOD, IdoftCategory::kOD,
    IdoftCategory::kNIO,  IdoftCategory::kID,  IdoftCategory::kUD};
constexpr std::array<Label, 5> kFlakyCatLabels = {
    FlakyCatCategory::kAsyncWait, FlakyCatCategory::kConcurrency, FlakyCatCategory::kTime,
    FlakyCatCategory::kTestOrderDependency, FlakyCatCategory::kUnorderedCollections};

std::span<const LabelInfo> info_of(Taxonomy taxonomy) {
  switch (taxonomy) {
    case Taxonomy::kDetection: return kDetectionInfo;
    case Taxonomy::kIdoft: return kIdoftInfo;
    case Taxonomy::kFlakyCat: return kFlakyCatInfo;
  }
  return {};
}

}  // namespace

std::string_view to_string(Taxonomy taxonomy) {
  switch (taxonomy) {
    case Taxonomy::kDetection: return "detection";
    case Taxonomy::kIdoft: return "idoft";
    case Taxonomy::kFlakyCat: return "flakycat";
  }
  return "unknown";
}

std::optional<Taxonomy> parse_taxonomy(std::string_view name) {
  for (Taxonomy t : {Taxonomy::kDetection, Taxonomy::kIdoft, Taxonomy::kFlakyCat}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view Label::token() const { return info_of(taxonomy_)[code_].token; }

std::string_view Label::display_name() const { return info_of(taxonomy_)[code_].display; }

std::optional<Label> Label::from_code(Taxonomy taxonomy, std::uint8_t code) {
  const auto labels = labels_of(taxonomy);
  if (code >= labels.size()) return std::nullopt;
  return labels[code];
}

std::optional<Label> parse_label(std::string_view token, Taxonomy taxonomy) {
  const auto info = info_of(taxonomy);
  for (std::size_t i = 0; i < info.size(); ++i) {
    if (info[i].token == token) return labels_of(taxonomy)[i];
  }
  return std::nullopt;
}

std::span<const Label> labels_of(Taxonomy taxonomy) {
  switch (taxonomy) {
    case Taxonomy::kDetection: return kDetectionLabels;
    case Taxonomy::kIdoft: return kIdoftLabels;
    case Taxonomy::kFlakyCat: return kFlakyCatLabels;
  }
  return {};
}

std::optional<Taxonomy> infer_taxonomy(std::span<const std::string> tokens) {
  std::optional<Taxonomy> found;
  for (Taxonomy t : {Taxonomy::kDetection, Taxonomy::kIdoft, Taxonomy::kFlakyCat}) {
    bool all = !tokens.empty();
    for (const auto& token : tokens) {
      if (!parse_label(token, t)) {
        all = false;
        break;
      }
    }
    if (all) {
      if (found) return std::nullopt;
      found = t;
    }
  }
  return found;
}

}  // namespace flakysieve
