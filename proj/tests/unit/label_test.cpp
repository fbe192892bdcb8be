#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "flakysieve/csv.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/io.hpp"
#include "flakysieve/label.hpp"
#include "flakysieve/rng.hpp"

namespace flakysieve {
namespace {

TEST(Label, TokensRoundTripForEveryTaxonomy) {
  for (auto taxonomy : {Taxonomy::kDetection, Taxonomy::kIdoft, Taxonomy::kFlakyCat}) {
    for (Label label : labels_of(taxonomy)) {
      auto parsed = parse_label(label.token(), taxonomy);
      ASSERT_TRUE(parsed.has_value()) << label.token();
      EXPECT_EQ(*parsed, label);
    }
  }
}

TEST(Label, RejectsTokensFromAnotherTaxonomy) {
  EXPECT_FALSE(parse_label("flaky", Taxonomy::kFlakyCat).has_value());
  EXPECT_FALSE(parse_label("async_wait", Taxonomy::kDetection).has_value());
  EXPECT_FALSE(parse_label("", Taxonomy::kIdoft).has_value());
}

TEST(Label, TaxonomySizes) {
  EXPECT_EQ(labels_of(Taxonomy::kDetection).size(), 2u);
  EXPECT_EQ(labels_of(Taxonomy::kIdoft).size(), 6u);
  EXPECT_EQ(labels_of(Taxonomy::kFlakyCat).size(), 5u);
}

TEST(Label, InfersTaxonomyFromTokens) {
  std::vector<std::string> cat = {"time", "async_wait"};
  std::vector<std::string> det = {"flaky", "non_flaky"};
  std::vector<std::string> mixed = {"flaky", "time"};
  EXPECT_EQ(infer_taxonomy(cat), Taxonomy::kFlakyCat);
  EXPECT_EQ(infer_taxonomy(det), Taxonomy::kDetection);
  EXPECT_FALSE(infer_taxonomy(mixed).has_value());
}

TEST(Label, TaxonomyNames) {
  EXPECT_EQ(parse_taxonomy("flakycat"), Taxonomy::kFlakyCat);
  EXPECT_EQ(to_string(Taxonomy::kIdoft), "idoft");
  EXPECT_FALSE(parse_taxonomy("FlakyCat?").has_value());
}

TEST(Csv, QuotedFieldsMaySpanLines) {
  auto records = csv::parse("a,b\n\"x\ny\",\"say \"\"hi\"\"\"\r\nlast,\n");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1].fields[0], "x\ny");
  EXPECT_EQ(records[1].fields[1], "say \"hi\"");
  EXPECT_EQ(records[1].line, 2u);
  EXPECT_EQ(records[2].line, 4u);
  EXPECT_EQ(records[2].fields, (std::vector<std::string>{"last", ""}));
}

TEST(Csv, UnterminatedQuoteIsALoadError) {
  EXPECT_THROW(csv::parse("a\n\"open\n"), LoadError);
}

TEST(Csv, AppendFieldQuotesWhenNeeded) {
  std::string out;
  csv::append_field(out, "plain");
  out += ',';
  csv::append_field(out, "a,\"b\"");
  EXPECT_EQ(out, "plain,\"a,\"\"b\"\"\"");
  auto back = csv::parse(out);
  EXPECT_EQ(back[0].fields[1], "a,\"b\"");
}

TEST(Io, AtomicWriteThenRead) {
  testing::TempDir dir;
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  EXPECT_EQ(read_file(dir / "f.txt"), "two");
  EXPECT_THROW(read_file(dir / "missing"), LoadError);
}

TEST(Io, FloatFormattingRoundTrips) {
  for (float v : {0.1f, -3.25f, 1e-30f, 123456.789f, 0.0f}) {
    EXPECT_EQ(std::stof(format_float(v)), v) << format_float(v);
  }
  EXPECT_EQ(format_float(2.0f), "2");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, IndexStaysInRangeAndCoversIt) {
  Rng rng(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    auto v = rng.index(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  for (int i = 0; i < 1000; ++i) {
    auto v = rng.between(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
  }
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(9);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(Rng, DerivedSeedsDependOnStreamName) {
  EXPECT_EQ(derive_seed(5, "split"), derive_seed(5, "split"));
  EXPECT_NE(derive_seed(5, "split"), derive_seed(5, "triplets"));
  EXPECT_NE(derive_seed(5, "split"), derive_seed(6, "split"));
}

TEST(Error, StageTagKeepsKind) {
  try {
    throw EmbedError("missing embedding for 'x'").with_stage("embed");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmbed);
    EXPECT_EQ(e.stage(), "embed");
    EXPECT_NE(std::string(e.what()).find("missing embedding for 'x'"), std::string::npos);
  }
}

}  // namespace
}  // namespace flakysieve
