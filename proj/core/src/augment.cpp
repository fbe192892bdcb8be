#include "flakysieve/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <numeric>
#include <set>
#include <unordered_set>

#include "flakysieve/csv.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/io.hpp"

namespace flakysieve {
namespace {

constexpr std::string_view kAlphanumeric =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

bool is_significant(const CodeToken& t) {
  return t.kind != TokenKind::kWhitespace && t.kind != TokenKind::kComment;
}

const CodeToken* previous_significant(const std::vector<CodeToken>& tokens, std::size_t i) {
  while (i > 0) {
    --i;
    if (is_significant(tokens[i])) return &tokens[i];
  }
  return nullptr;
}

const CodeToken* next_significant(const std::vector<CodeToken>& tokens, std::size_t i) {
  for (++i; i < tokens.size(); ++i) {
    if (is_significant(tokens[i])) return &tokens[i];
  }
  return nullptr;
}

bool is_primitive_type(std::string_view word) {
  return word == "int" || word == "long" || word == "float" || word == "double" ||
         word == "boolean" || word == "byte" || word == "char" || word == "short";
}

bool follows_member_access(const std::vector<CodeToken>& tokens, std::size_t i) {
  const CodeToken* prev = previous_significant(tokens, i);
  return prev != nullptr && prev->kind == TokenKind::kPunctuation &&
         (prev->text == "." || prev->text == "@");
}

bool looks_like_declaration(const std::vector<CodeToken>& tokens, std::size_t i) {
  const CodeToken* prev = previous_significant(tokens, i);
  const CodeToken* next = next_significant(tokens, i);
  if (prev == nullptr || next == nullptr) return false;
  const bool type_before =
      prev->kind == TokenKind::kIdentifier ||
      (prev->kind == TokenKind::kKeyword && is_primitive_type(prev->text)) ||
      (prev->kind == TokenKind::kPunctuation && (prev->text == ">" || prev->text == "]"));
  if (!type_before) return false;
  return next->kind == TokenKind::kPunctuation &&
         (next->text == "=" || next->text == ";" || next->text == "," || next->text == ")" ||
          next->text == ":");
}

struct NumberParts {
  std::string_view prefix;  // "", "0x", "0X", "0b", "0B"
  std::string digits;       // underscores removed
  std::string_view suffix;
  int base = 10;
};

std::optional<NumberParts> split_integer(std::string_view literal) {
  NumberParts parts;
  std::string_view body = literal;
  if (!body.empty() && (body.back() == 'l' || body.back() == 'L')) {
    parts.suffix = body.substr(body.size() - 1);
    body.remove_suffix(1);
  }
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    parts.prefix = body.substr(0, 2);
    parts.base = 16;
    body.remove_prefix(2);
  } else if (body.size() > 2 && body[0] == '0' && (body[1] == 'b' || body[1] == 'B')) {
    parts.prefix = body.substr(0, 2);
    parts.base = 2;
    body.remove_prefix(2);
  }
  for (char c : body) {
    if (c == '_') continue;
    const bool ok = parts.base == 16 ? std::isxdigit(static_cast<unsigned char>(c)) != 0
                    : parts.base == 2 ? (c == '0' || c == '1')
                                      : (c >= '0' && c <= '9');
    if (!ok) return std::nullopt;
    parts.digits.push_back(c);
  }
  if (parts.digits.empty()) return std::nullopt;
  // Leading zero on a decimal literal means octal in Java.
  if (parts.base == 10 && parts.digits.size() > 1 && parts.digits[0] == '0') return std::nullopt;
  return parts;
}

std::optional<std::string> mutate_string_literal(std::string_view literal, Rng& rng) {
  if (literal.size() < 2 || literal.front() != '"' || literal.substr(0, 3) == "\"\"\"") {
    return std::nullopt;
  }
  const std::string_view content = literal.substr(1, literal.size() - 2);
  std::string out = "\"";
  std::vector<std::size_t> replaced;  // positions in `out` of replaced characters
  std::vector<char> originals;
  for (std::size_t i = 0; i < content.size();) {
    const unsigned char c = static_cast<unsigned char>(content[i]);
    if (c == '\\') {
      std::size_t len = 2;
      if (i + 1 < content.size() && content[i + 1] == 'u') {
        len = 2;
        while (i + len < content.size() && content[i + len] == 'u') ++len;
        len = std::min(len + 4, content.size() - i);
      } else if (i + 1 < content.size() && content[i + 1] >= '0' && content[i + 1] <= '7') {
        while (len < 4 && i + len < content.size() && content[i + len] >= '0' &&
               content[i + len] <= '7') {
          ++len;
        }
      }
      len = std::min(len, content.size() - i);
      out.append(content.substr(i, len));
      i += len;
      continue;
    }
    std::size_t len = 1;
    if (c >= 0x80) {
      while (i + len < content.size() &&
             (static_cast<unsigned char>(content[i + len]) & 0xC0) == 0x80) {
        ++len;
      }
    }
    replaced.push_back(out.size());
    originals.push_back(len == 1 ? static_cast<char>(c) : '\0');
    out.push_back(kAlphanumeric[rng.index(kAlphanumeric.size())]);
    i += len;
  }
  if (replaced.empty()) return std::nullopt;
  out.push_back('"');
  if (out == literal) {
    // Every draw matched the original; bump the first replaced character.
    char& first = out[replaced.front()];
    const auto pos = kAlphanumeric.find(first);
    first = kAlphanumeric[(pos + 1) % kAlphanumeric.size()];
  }
  return out;
}

bool is_plain_string(const CodeToken& t) {
  return t.kind == TokenKind::kStringLiteral && t.text.size() > 2 && t.text.front() == '"' &&
         t.text.substr(0, 3) != "\"\"\"";
}

bool is_swappable_type(const CodeToken& t) {
  return t.kind == TokenKind::kKeyword &&
         (t.text == "int" || t.text == "long" || t.text == "float" || t.text == "double");
}

std::string_view swapped_type(std::string_view type) {
  if (type == "int") return "long";
  if (type == "long") return "int";
  if (type == "float") return "double";
  return "float";
}

std::optional<std::string> perturb_number(std::string_view literal, Rng& rng) {
  if (is_integer_literal(literal)) {
    const auto magnitude = rng.between(1, 9);
    const std::int64_t delta = rng.coin() ? magnitude : -magnitude;
    if (auto r = shift_integer_literal(literal, delta)) return r;
    return shift_integer_literal(literal, -delta);
  }
  const double amount = rng.uniform(0.01, 0.10);
  const double factor = rng.coin() ? 1.0 + amount : 1.0 - amount;
  return scale_float_literal(literal, factor);
}

bool perturbable(const CodeToken& t) {
  if (t.kind != TokenKind::kNumberLiteral) return false;
  if (is_integer_literal(t.text)) {
    return shift_integer_literal(t.text, 1).has_value() ||
           shift_integer_literal(t.text, -1).has_value();
  }
  return scale_float_literal(t.text, 1.05).has_value();
}

template <typename Pred>
std::vector<std::size_t> sites(const std::vector<CodeToken>& tokens, Pred pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (pred(tokens[i])) out.push_back(i);
  }
  return out;
}

bool apply(MutationKind kind, std::vector<CodeToken>& tokens, Rng& rng) {
  switch (kind) {
    case MutationKind::kRenameIdentifier: {
      const auto candidates = rename_candidates(tokens);
      if (candidates.empty()) return false;
      const auto& from = candidates[rng.index(candidates.size())];
      const std::string to = fresh_identifier(tokens);
      return rename_identifier(tokens, from, to) > 0;
    }
    case MutationKind::kPerturbNumber: {
      const auto where = sites(tokens, perturbable);
      if (where.empty()) return false;
      auto& token = tokens[where[rng.index(where.size())]];
      auto replacement = perturb_number(token.text, rng);
      if (!replacement || *replacement == token.text) return false;
      token.text = std::move(*replacement);
      return true;
    }
    case MutationKind::kReplaceString: {
      const auto where = sites(tokens, [](const CodeToken& t) {
        return is_plain_string(t);
      });
      if (where.empty()) return false;
      auto& token = tokens[where[rng.index(where.size())]];
      auto replacement = mutate_string_literal(token.text, rng);
      if (!replacement) return false;
      token.text = std::move(*replacement);
      return true;
    }
    case MutationKind::kSwapNumericType: {
      const auto where = sites(tokens, is_swappable_type);
      if (where.empty()) return false;
      auto& token = tokens[where[rng.index(where.size())]];
      token.text = std::string(swapped_type(token.text));
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(MutationKind kind) {
  switch (kind) {
    case MutationKind::kRenameIdentifier: return "rename_identifier";
    case MutationKind::kPerturbNumber: return "perturb_number";
    case MutationKind::kReplaceString: return "replace_string";
    case MutationKind::kSwapNumericType: return "swap_numeric_type";
  }
  return "unknown";
}

std::vector<std::string> rename_candidates(const std::vector<CodeToken>& tokens) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::kIdentifier) continue;
    if (follows_member_access(tokens, i)) continue;
    if (looks_like_declaration(tokens, i)) names.insert(tokens[i].text);
  }
  return {names.begin(), names.end()};
}

std::size_t rename_identifier(std::vector<CodeToken>& tokens, std::string_view from,
                              std::string_view to) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto& t = tokens[i];
    if (t.kind != TokenKind::kIdentifier || t.text != from) continue;
    if (follows_member_access(tokens, i)) continue;
    t.text = std::string(to);
    ++changed;
  }
  return changed;
}

std::string fresh_identifier(const std::vector<CodeToken>& tokens) {
  std::unordered_set<std::string_view> used;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::kIdentifier) used.insert(t.text);
  }
  for (std::size_t k = 0;; ++k) {
    std::string name = "v" + std::to_string(k);
    if (!used.contains(name)) return name;
  }
}

bool is_integer_literal(std::string_view literal) {
  if (literal.empty()) return false;
  if (literal.size() > 2 && literal[0] == '0' &&
      (literal[1] == 'x' || literal[1] == 'X' || literal[1] == 'b' || literal[1] == 'B')) {
    return true;
  }
  for (char c : literal) {
    if (c == '.' || c == 'e' || c == 'E' || c == 'f' || c == 'F' || c == 'd' || c == 'D') {
      return false;
    }
  }
  return true;
}

std::optional<std::string> shift_integer_literal(std::string_view literal, std::int64_t delta) {
  auto parts = split_integer(literal);
  if (!parts) return std::nullopt;
  std::uint64_t value = 0;
  const auto* first = parts->digits.data();
  const auto* last = first + parts->digits.size();
  if (auto [ptr, ec] = std::from_chars(first, last, value, parts->base);
      ec != std::errc() || ptr != last) {
    return std::nullopt;
  }
  const bool is_long = !parts->suffix.empty();
  std::uint64_t limit = 0;
  if (parts->base == 10) {
    limit = is_long ? static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())
                    : static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max());
  } else {
    limit = is_long ? std::numeric_limits<std::uint64_t>::max()
                    : std::numeric_limits<std::uint32_t>::max();
  }
  if (value > limit) return std::nullopt;
  std::uint64_t result = 0;
  if (delta < 0) {
    const auto down = static_cast<std::uint64_t>(-delta);
    if (down > value) return std::nullopt;
    result = value - down;
  } else {
    const auto up = static_cast<std::uint64_t>(delta);
    if (up > limit - value) return std::nullopt;
    result = value + up;
  }
  char buf[80];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), result, parts->base);
  std::string digits(buf, end);
  if (parts->base == 16 &&
      std::any_of(parts->digits.begin(), parts->digits.end(),
                  [](char c) { return c >= 'A' && c <= 'F'; })) {
    std::transform(digits.begin(), digits.end(), digits.begin(),
                   [](char c) { return static_cast<char>(std::toupper(c)); });
  }
  return std::string(parts->prefix) + digits + std::string(parts->suffix);
}

std::optional<std::string> scale_float_literal(std::string_view literal, double factor) {
  if (is_integer_literal(literal)) return std::nullopt;
  std::string_view body = literal;
  std::string_view suffix;
  if (!body.empty() && std::string_view("fFdD").find(body.back()) != std::string_view::npos) {
    suffix = body.substr(body.size() - 1);
    body.remove_suffix(1);
  }
  std::string clean;
  for (char c : body) {
    if (c != '_') clean.push_back(c);
  }
  if (clean.empty()) return std::nullopt;
  // from_chars rejects a leading '.', so give it a zero.
  if (clean.front() == '.') clean.insert(clean.begin(), '0');
  double value = 0.0;
  const char* last = clean.data() + clean.size();
  if (auto [ptr, ec] = std::from_chars(clean.data(), last, value);
      ec != std::errc() || ptr != last) {
    return std::nullopt;
  }
  if (value == 0.0 || !std::isfinite(value)) return std::nullopt;
  const double scaled = value * factor;
  const bool single = suffix == "f" || suffix == "F";
  std::string text;
  if (single) {
    const auto narrowed = static_cast<float>(scaled);
    if (!std::isfinite(narrowed) || narrowed == 0.0f) return std::nullopt;
    text = format_float(narrowed);
  } else {
    if (!std::isfinite(scaled)) return std::nullopt;
    text = format_double(scaled);
  }
  if (text.find_first_of(".eE") == std::string::npos) text += ".0";
  text += suffix;
  if (text == literal) return std::nullopt;
  return text;
}

std::string mutate(std::string_view source, std::span<const MutationKind> ops, Rng& rng) {
  if (ops.empty()) throw MutateError("no mutation ops requested");
  auto tokens = lex(source);
  bool applied = false;
  for (MutationKind op : ops) applied = apply(op, tokens, rng) || applied;
  if (!applied) throw MutateError("no applicable site");
  std::string out = concat(tokens);
  if (out == source) throw MutateError("mutations cancelled out");
  try {
    lex(out);
  } catch (const LexError& e) {
    throw MutateError(std::string("mutated source no longer lexes: ") + e.what());
  }
  return out;
}

std::string mutate(const FlakyTest& test, std::span<const MutationKind> ops, Rng& rng) {
  return mutate(std::string_view(test.source), ops, rng);
}

std::vector<std::size_t> apportion(std::span<const std::size_t> weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size(), 0);
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  if (sum == 0) return out;
  std::vector<std::size_t> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0 && total > std::numeric_limits<std::size_t>::max() / weights[i]) {
      throw ConfigError("apportionment overflow");
    }
    const std::size_t scaled = total * weights[i];
    out[i] = scaled / sum;
    remainder[i] = scaled % sum;
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

Dataset AugmentedDataset::combined() const {
  std::vector<FlakyTest> tests = originals.tests();
  tests.reserve(size());
  for (const auto& v : variants) tests.push_back({v.id, v.project, v.source, v.label});
  return Dataset(originals.taxonomy(), std::move(tests));
}

AugmentedDataset augment_dataset(const Dataset& dataset, std::size_t target_total,
                                 std::uint64_t seed, const AugmentOptions& options) {
  if (target_total < dataset.size()) {
    throw AugmentError("target_total " + std::to_string(target_total) +
                       " is below the dataset size " + std::to_string(dataset.size()));
  }
  if (options.min_ops == 0 || options.max_ops < options.min_ops) {
    throw ConfigError("mutation op count range must satisfy 1 <= min <= max");
  }
  AugmentedDataset result{dataset, {}};
  const std::size_t deficit = target_total - dataset.size();
  if (deficit == 0) return result;
  if (dataset.empty()) throw AugmentError("cannot augment an empty dataset");

  std::map<Label, std::vector<std::size_t>> members;
  const auto& tests = dataset.tests();
  for (std::size_t i = 0; i < tests.size(); ++i) members[tests[i].label].push_back(i);
  std::vector<std::size_t> sizes;
  for (const auto& [label, idx] : members) sizes.push_back(idx.size());
  const auto quotas = apportion(sizes, deficit);

  std::unordered_set<std::string> seen;
  for (const auto& t : tests) seen.insert(t.source);

  Rng rng(derive_seed(seed, "augment"));
  const std::size_t budget = options.retries_per_variant * deficit;
  std::size_t attempts = 0;
  std::vector<MutationKind> ops;
  std::size_t class_index = 0;
  for (const auto& [label, idx] : members) {
    const std::size_t quota = quotas[class_index++];
    std::size_t produced = 0;
    while (produced < quota) {
      if (attempts >= budget) {
        throw AugmentError("uniqueness not reached: produced " +
                           std::to_string(result.variants.size()) + " of " +
                           std::to_string(deficit) + " variants after " +
                           std::to_string(attempts) + " attempts");
      }
      const std::size_t attempt = attempts++;
      const FlakyTest& parent = tests[idx[rng.index(idx.size())]];
      const auto op_count = static_cast<std::size_t>(rng.between(
          static_cast<std::int64_t>(options.min_ops), static_cast<std::int64_t>(options.max_ops)));
      ops.clear();
      for (std::size_t k = 0; k < op_count; ++k) {
        ops.push_back(kAllMutationKinds[rng.index(std::size(kAllMutationKinds))]);
      }
      std::string source;
      try {
        source = mutate(parent, ops, rng);
      } catch (const MutateError&) {
        continue;
      } catch (const LexError&) {
        continue;
      }
      if (!seen.insert(source).second) continue;
      result.variants.push_back(
          {parent.id, {}, parent.project, std::move(source), parent.label, attempt});
      ++produced;
    }
  }

  std::sort(result.variants.begin(), result.variants.end(),
            [](const Variant& a, const Variant& b) {
              return std::tie(a.parent_id, a.attempt) < std::tie(b.parent_id, b.attempt);
            });
  std::set<std::string, std::less<>> ids;
  for (const auto& t : tests) ids.insert(t.id);
  std::string last_parent;
  std::size_t ordinal = 0;
  for (auto& v : result.variants) {
    ordinal = v.parent_id == last_parent ? ordinal + 1 : 1;
    last_parent = v.parent_id;
    std::string id = v.parent_id + "~v" + std::to_string(ordinal);
    while (ids.contains(id)) id += "_";
    ids.insert(id);
    v.id = std::move(id);
  }
  return result;
}

std::string to_csv(const AugmentedDataset& augmented) {
  std::string out = "id,project,label,source,parent_id\n";
  auto row = [&out](std::string_view id, std::string_view project, Label label,
                    std::string_view source, std::string_view parent) {
    csv::append_field(out, id);
    out.push_back(',');
    csv::append_field(out, project);
    out.push_back(',');
    csv::append_field(out, label.token());
    out.push_back(',');
    csv::append_field(out, source, /*force_quote=*/true);
    out.push_back(',');
    csv::append_field(out, parent);
    out.push_back('\n');
  };
  for (const auto& t : augmented.originals.tests()) row(t.id, t.project, t.label, t.source, "");
  for (const auto& v : augmented.variants) row(v.id, v.project, v.label, v.source, v.parent_id);
  return out;
}

void save_augmented(const AugmentedDataset& augmented, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(augmented));
}

}  // namespace flakysieve
