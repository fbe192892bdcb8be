#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flakysieve/dataset.hpp"
#include "flakysieve/lexer.hpp"
#include "flakysieve/rng.hpp"

namespace flakysieve {

enum class MutationKind {
  kRenameIdentifier,
  kPerturbNumber,
  kReplaceString,
  kSwapNumericType,
};

inline constexpr MutationKind kAllMutationKinds[] = {
    MutationKind::kRenameIdentifier,
    MutationKind::kPerturbNumber,
    MutationKind::kReplaceString,
    MutationKind::kSwapNumericType,
};

std::string_view to_string(MutationKind kind);

// Applies each op in turn at a randomly chosen applicable site. Ops with no
// applicable site are skipped. Throws MutateError when `ops` is empty, when
// no op applied ("no applicable site"), or when the result equals the input.
std::string mutate(const FlakyTest& test, std::span<const MutationKind> ops, Rng& rng);
std::string mutate(std::string_view source, std::span<const MutationKind> ops, Rng& rng);

// Building blocks of `mutate`, exposed for direct use and testing. They work
// on a token stream in place and keep the token count unchanged.

// Identifiers that look like local declarations (a type-like token before, one
// of `= ; , ) :` after), excluding keywords and names used right after `.`
// or `@`.
std::vector<std::string> rename_candidates(const std::vector<CodeToken>& tokens);
// Renames every occurrence of `from` not preceded by `.` or `@`. Returns the
// number of tokens changed.
std::size_t rename_identifier(std::vector<CodeToken>& tokens, std::string_view from,
                              std::string_view to);
// First `v<k>` name not already used as an identifier.
std::string fresh_identifier(const std::vector<CodeToken>& tokens);

// Adds `delta` to an integer literal (decimal, hex or binary, optional L
// suffix). Returns nullopt for literals it cannot rewrite safely (octal,
// float, overflowing, or a result below zero).
std::optional<std::string> shift_integer_literal(std::string_view literal, std::int64_t delta);
// Scales a floating literal by `factor`, keeping its suffix.
std::optional<std::string> scale_float_literal(std::string_view literal, double factor);
bool is_integer_literal(std::string_view literal);

struct Variant {
  std::string parent_id;
  std::string id;
  std::string project;
  std::string source;
  Label label;
  std::size_t attempt = 0;  // global attempt index that produced it
};

struct AugmentedDataset {
  Dataset originals;
  std::vector<Variant> variants;  // sorted by parent id, then attempt

  // Originals followed by variants as one dataset.
  Dataset combined() const;
  std::size_t size() const { return originals.size() + variants.size(); }
};

struct AugmentOptions {
  // Attempts allowed per missing variant before giving up.
  std::size_t retries_per_variant = 100;
  std::size_t min_ops = 1;
  std::size_t max_ops = 3;
};

// Adds `target_total - |dataset|` unique variants. Per-class variant counts
// follow the class sizes (largest-remainder apportionment). Throws
// AugmentError when the target is below the dataset size or uniqueness cannot
// be reached within the retry budget.
AugmentedDataset augment_dataset(const Dataset& dataset, std::size_t target_total,
                                 std::uint64_t seed, const AugmentOptions& options = {});

// Largest-remainder apportionment of `total` over `weights`; ties go to the
// earlier entry.
std::vector<std::size_t> apportion(std::span<const std::size_t> weights, std::size_t total);

// Dataset CSV plus a `parent_id` column, empty for originals.
std::string to_csv(const AugmentedDataset& augmented);
void save_augmented(const AugmentedDataset& augmented, const std::filesystem::path& path);

}  // namespace flakysieve
