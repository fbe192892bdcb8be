#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace flakysieve {

// Which labelling scheme a dataset uses. A dataset never mixes them.
enum class Taxonomy : std::uint8_t {
  kDetection,  // flaky / non_flaky
  kIdoft,      // IDoFT root-cause categories
  kFlakyCat,   // FlakyCat root-cause categories
};

std::string_view to_string(Taxonomy taxonomy);
std::optional<Taxonomy> parse_taxonomy(std::string_view name);

enum class DetectionLabel : std::uint8_t { kFlaky, kNonFlaky };
enum class IdoftCategory : std::uint8_t { kNDOD, kNOD, kOD, kNIO, kID, kUD };
enum class FlakyCatCategory : std::uint8_t {
  kAsyncWait,
  kConcurrency,
  kTime,
  kTestOrderDependency,
  kUnorderedCollections,
};

// A label from one of the three taxonomies. `code` indexes the taxonomy's
// enumeration order.
class Label {
 public:
  constexpr Label() : Label(DetectionLabel::kFlaky) {}
  constexpr Label(DetectionLabel l)
      : taxonomy_(Taxonomy::kDetection), code_(static_cast<std::uint8_t>(l)) {}
  constexpr Label(IdoftCategory l)
      : taxonomy_(Taxonomy::kIdoft), code_(static_cast<std::uint8_t>(l)) {}
  constexpr Label(FlakyCatCategory l)
      : taxonomy_(Taxonomy::kFlakyCat), code_(static_cast<std::uint8_t>(l)) {}

  constexpr Taxonomy taxonomy() const { return taxonomy_; }
  constexpr std::uint8_t code() const { return code_; }

  // Case-sensitive token used in CSV files, e.g. "async_wait" or "OD".
  std::string_view token() const;
  // Human-readable name used in report tables.
  std::string_view display_name() const;

  friend constexpr bool operator==(Label, Label) = default;
  friend constexpr auto operator<=>(Label, Label) = default;

  static std::optional<Label> from_code(Taxonomy taxonomy, std::uint8_t code);

 private:
  Taxonomy taxonomy_;
  std::uint8_t code_;
};

std::optional<Label> parse_label(std::string_view token, Taxonomy taxonomy);

// All labels of a taxonomy, in enumeration order.
std::span<const Label> labels_of(Taxonomy taxonomy);

// The only taxonomy that contains every given token, if there is one.
std::optional<Taxonomy> infer_taxonomy(std::span<const std::string> tokens);

}  // namespace flakysieve
