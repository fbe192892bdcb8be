#include <gtest/gtest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "flakysieve/augment.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/lexer.hpp"

namespace flakysieve {
namespace {

constexpr MutationKind kRename[] = {MutationKind::kRenameIdentifier};
constexpr MutationKind kPerturb[] = {MutationKind::kPerturbNumber};
constexpr MutationKind kString[] = {MutationKind::kReplaceString};
constexpr MutationKind kSwap[] = {MutationKind::kSwapNumericType};

TEST(Mutate, RenameIsConsistent) {
  auto tokens = lex("int a = a + 1;");
  EXPECT_EQ(rename_candidates(tokens), std::vector<std::string>{"a"});
  EXPECT_EQ(fresh_identifier(tokens), "v0");
  EXPECT_EQ(rename_identifier(tokens, "a", "v0"), 2u);
  EXPECT_EQ(concat(tokens), "int v0 = v0 + 1;");

  Rng rng(3);
  EXPECT_EQ(mutate("int a = a + 1;", kRename, rng), "int v0 = v0 + 1;");
}

TEST(Mutate, RenameSkipsMemberAccessAndFreshNameAvoidsClashes) {
  Rng rng(0);
  auto out = mutate("int v0 = 1; int size = v0 + list.size;", kRename, rng);
  EXPECT_NE(out.find("list.size"), std::string::npos) << out;
  auto tokens = lex("int v0 = 1; int v1 = v0;");
  EXPECT_EQ(fresh_identifier(tokens), "v2");
}

TEST(Mutate, IncrementLiteral) {
  EXPECT_EQ(shift_integer_literal("42", 1), "43");
  auto tokens = lex("sleep(42)");
  tokens[2].text = *shift_integer_literal(tokens[2].text, 1);
  EXPECT_EQ(concat(tokens), "sleep(43)");
}

TEST(Mutate, PerturbChangesOnlyTheLiteral) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto out = mutate("sleep(42)", kPerturb, rng);
    ASSERT_EQ(out.rfind("sleep(", 0), 0u) << out;
    const int value = std::stoi(out.substr(6));
    EXPECT_NE(value, 42);
    EXPECT_GE(value, 33);
    EXPECT_LE(value, 51);
  }
}

TEST(Mutate, LiteralEdgeCases) {
  EXPECT_EQ(shift_integer_literal("0x1F", 1), "0x20");
  EXPECT_EQ(shift_integer_literal("0XFF", 1), "0X100");
  EXPECT_EQ(shift_integer_literal("9L", 3), "12L");
  EXPECT_EQ(shift_integer_literal("0b11", -1), "0b10");
  EXPECT_FALSE(shift_integer_literal("0", -1).has_value());
  EXPECT_FALSE(shift_integer_literal("2147483647", 1).has_value());
  EXPECT_EQ(shift_integer_literal("2147483647L", 1), "2147483648L");
  EXPECT_FALSE(shift_integer_literal("017", 1).has_value());
  EXPECT_EQ(scale_float_literal("2.0", 1.5), "3.0");
  EXPECT_EQ(scale_float_literal("2f", 1.5), "3.0f");
  EXPECT_FALSE(scale_float_literal("0.0", 2.0).has_value());
  EXPECT_TRUE(is_integer_literal("0xFF"));
  EXPECT_FALSE(is_integer_literal("1e3"));
}

TEST(Mutate, StringReplacementKeepsLengthAndEscapes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto out = mutate("log(\"ab\\ncd\");", kString, rng);
    auto toks = lex(out);
    ASSERT_EQ(toks[2].kind, TokenKind::kStringLiteral);
    EXPECT_EQ(toks[2].text.size(), std::string("\"ab\\ncd\"").size());
    EXPECT_EQ(toks[2].text.substr(3, 2), "\\n");
    EXPECT_NE(out, "log(\"ab\\ncd\");");
  }
}

TEST(Mutate, SwapNumericType) {
  Rng rng(1);
  EXPECT_EQ(mutate("int x = 1;", kSwap, rng), "long x = 1;");
  EXPECT_EQ(mutate("double y = 1;", kSwap, rng), "float y = 1;");
}

TEST(Mutate, NoOpsOrNoSites) {
  Rng rng(0);
  EXPECT_THROW(mutate("int a = 1;", std::span<const MutationKind>{}, rng), MutateError);
  try {
    mutate("foo();", kPerturb, rng);
    FAIL();
  } catch (const MutateError& e) {
    EXPECT_NE(std::string(e.what()).find("no applicable site"), std::string::npos);
  }
}

TEST(Apportion, LargestRemainder) {
  const std::size_t weights[] = {125, 48, 42, 103, 51};
  auto quotas = apportion(weights, 270);
  EXPECT_EQ(quotas, (std::vector<std::size_t>{92, 35, 31, 75, 37}));
  for (std::size_t i = 0; i < 5; ++i) {
    const double exact = 270.0 * double(weights[i]) / 369.0;
    EXPECT_LE(std::abs(double(quotas[i]) - exact), 1.0);
  }
  const std::size_t even[] = {1, 1, 1};
  EXPECT_EQ(apportion(even, 2), (std::vector<std::size_t>{1, 1, 0}));
}

TEST(Augment, FlakyCatTo639) {
  auto d = testing::flakycat_fixture();
  auto a = augment_dataset(d, 639, 7);
  ASSERT_EQ(a.variants.size(), 270u);
  EXPECT_EQ(a.size(), 639u);
  std::map<Label, std::size_t> per_class;
  std::set<std::string> sources;
  std::set<std::string> ids;
  for (const auto& t : d.tests()) {
    sources.insert(t.source);
    ids.insert(t.id);
  }
  for (const auto& v : a.variants) {
    ++per_class[v.label];
    EXPECT_TRUE(sources.insert(v.source).second) << v.id;
    EXPECT_TRUE(ids.insert(v.id).second) << v.id;
    EXPECT_EQ(d.find(v.parent_id)->label, v.label);
  }
  const auto counts = d.class_counts();
  for (const auto& [label, n] : per_class) {
    const double exact = 270.0 * double(counts.at(label)) / 369.0;
    EXPECT_LE(std::abs(double(n) - exact), 1.0) << label.token();
  }
}

TEST(Augment, TargetEqualsSizeAddsNothing) {
  auto d = testing::flakycat_fixture();
  auto a = augment_dataset(d, d.size(), 0);
  EXPECT_TRUE(a.variants.empty());
  EXPECT_EQ(a.combined().size(), d.size());
}

TEST(Augment, TwoTestsToSix) {
  Dataset d(Taxonomy::kDetection,
            {{"a", "p", "int x = 10; sleep(x);", DetectionLabel::kFlaky},
             {"b", "p", "String s = \"hello\"; int n = 3;", DetectionLabel::kNonFlaky}});
  auto a = augment_dataset(d, 6, 1);
  ASSERT_EQ(a.variants.size(), 4u);
  std::set<std::string> seen = {d.tests()[0].source, d.tests()[1].source};
  for (const auto& v : a.variants) {
    EXPECT_TRUE(seen.insert(v.source).second);
    EXPECT_NO_THROW(lex(v.source));
    EXPECT_EQ(v.label, d.find(v.parent_id)->label);
  }
}

TEST(Augment, DeterministicPerSeed) {
  auto d = testing::flakycat_fixture();
  EXPECT_EQ(to_csv(augment_dataset(d, 450, 3)), to_csv(augment_dataset(d, 450, 3)));
  EXPECT_NE(to_csv(augment_dataset(d, 450, 3)), to_csv(augment_dataset(d, 450, 4)));
}

TEST(Augment, BelowSizeAndExhaustedBudget) {
  Dataset d(Taxonomy::kDetection, {{"a", "p", "x();", DetectionLabel::kFlaky}});
  EXPECT_THROW(augment_dataset(d, 0, 0), AugmentError);
  try {
    augment_dataset(d, 3, 0);
    FAIL();
  } catch (const AugmentError& e) {
    EXPECT_NE(std::string(e.what()).find("0"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace flakysieve
