#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "biasrate/datagen.hpp"
#include "biasrate/extraction.hpp"
#include "test_support.hpp"

namespace biasrate {
namespace {

DistributionSpec gender_spec(std::vector<double> p, std::string label = "s") {
  return DistributionSpec(gender_attribute(), std::move(p), DistributionKind::biased, std::move(label));
}

std::vector<std::uint64_t> counts_of(const DistributionSpec& spec, std::uint64_t n) {
  return expected_counts(spec, n).counts();
}

TEST(ExpectedCounts, ReferenceBlocks) {
  EXPECT_EQ(counts_of(gender_spec({0.5, 0.5, 0.0}), 40), (std::vector<std::uint64_t>{20, 20, 0}));
  EXPECT_EQ(counts_of(gender_spec({0.1, 0.9, 0.0}), 40), (std::vector<std::uint64_t>{4, 36, 0}));
  EXPECT_EQ(counts_of(gender_spec({0.9, 0.1, 0.0}), 40), (std::vector<std::uint64_t>{36, 4, 0}));
  EXPECT_EQ(counts_of(gender_spec({1.0 / 3, 1.0 / 3, 1.0 / 3}), 40), (std::vector<std::uint64_t>{14, 13, 13}));
  EXPECT_EQ(counts_of(gender_spec({1.0, 0.0, 0.0}), 40), (std::vector<std::uint64_t>{40, 0, 0}));
}

TEST(ExpectedCounts, ZeroProportionNeverReceivesUnits) {
  for (std::uint64_t n = 1; n <= 200; ++n) {
    EXPECT_EQ(counts_of(gender_spec({0.5, 0.5, 0.0}), n)[2], 0u);
    EXPECT_EQ(counts_of(gender_spec({0.0, 1.0, 0.0}), n)[0], 0u);
  }
}

// Oracle: exact rational largest remainder for proportions given as
// numerators over a common denominator.
std::vector<std::uint64_t> rational_largest_remainder(const std::vector<std::uint64_t>& num,
                                                      std::uint64_t den, std::uint64_t n) {
  std::vector<std::uint64_t> out(num.size());
  std::vector<std::pair<std::uint64_t, std::size_t>> rem;  // (remainder, index)
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    out[i] = num[i] * n / den;
    assigned += out[i];
    if (num[i] > 0) rem.emplace_back(num[i] * n % den, i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[rem[k % rem.size()].second];
  return out;
}

TEST(ExpectedCounts, SumIsExactAndMatchesRationalOracle) {
  const std::vector<std::vector<std::uint64_t>> numerators = {
      {1, 1, 0}, {1, 9, 0}, {9, 1, 0}, {1, 1, 1}, {2, 3, 5}, {7, 0, 3}, {1, 0, 0}, {3, 3, 4}};
  for (const auto& num : numerators) {
    std::uint64_t den = 0;
    for (auto x : num) den += x;
    std::vector<double> p;
    for (auto x : num) p.push_back(static_cast<double>(x) / static_cast<double>(den));
    const auto spec = gender_spec(p);
    for (std::uint64_t n = 1; n <= 1000; ++n) {
      auto got = counts_of(spec, n);
      std::uint64_t sum = 0;
      for (auto c : got) sum += c;
      ASSERT_EQ(sum, n);
      ASSERT_EQ(got, rational_largest_remainder(num, den, n)) << "n=" << n << " den=" << den;
    }
  }
}

TEST(ExpectedCounts, StaysWithinOneOfExactQuota) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AttributeSpec five("Five", {"A", "B", "C", "D", "Other"});
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> p(5);
    double s = 0;
    for (auto& x : p) s += (x = unit(rng));
    for (auto& x : p) x /= s;
    DistributionSpec spec(five, p, DistributionKind::biased, "r");
    const std::uint64_t n = 1 + trial * 7;
    auto got = expected_counts(spec, n).counts();
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      sum += got[i];
      EXPECT_LE(std::abs(static_cast<double>(got[i]) - p[i] * n), 1.0 + 1e-9);
    }
    EXPECT_EQ(sum, n);
  }
}

TEST(ExpectedCounts, MonotoneInTotal) {
  for (const auto& p : std::vector<std::vector<double>>{{0.1, 0.9, 0.0}, {0.25, 0.5, 0.25}, {0.6, 0.3, 0.1}}) {
    auto spec = gender_spec(p);
    auto previous = counts_of(spec, 1);
    for (std::uint64_t n = 2; n <= 500; ++n) {
      auto current = counts_of(spec, n);
      for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(current[i] + 1, previous[i]) << n;
      previous = current;
    }
  }
  EXPECT_THROW(expected_counts(gender_spec({0.5, 0.5, 0.0}), 0), InputError);
}

TEST(Rendering, ExampleSentencePair) {
  TemplateConfig config;
  EXPECT_EQ(render_text(config, {{"She", "Florist"}, {"He", "Gardener"}}), "She is a Florist. He is a Gardener.");
  EXPECT_EQ(render_sentence("{O}: {G}!", "She", "Judge"), "Judge: She!");
  EXPECT_THROW(render_text(config, {{"Other", "Baker"}}), ConfigError);
}

TEST(Occupations, ParsesListFiles) {
  auto list = parse_occupations("# header\nFlorist\n\n  Gardener  \r\n#skip\nNurse");
  EXPECT_EQ(list, (std::vector<std::string>{"Florist", "Gardener", "Nurse"}));
  testing::TempDir dir;
  std::ofstream(dir / "occ.txt") << "Baker\nJudge\n";
  EXPECT_EQ(load_occupations((dir / "occ.txt").string()), (std::vector<std::string>{"Baker", "Judge"}));
  EXPECT_THROW(load_occupations((dir / "missing.txt").string()), ConfigError);
  EXPECT_GE(default_occupations().size(), 40u);
}

TEST(GenerateBlock, RealizesExpectedCountsExactly) {
  TemplateConfig config;
  for (const auto& p : std::vector<std::vector<double>>{{0.5, 0.5, 0.0}, {0.1, 0.9, 0.0}, {0.9, 0.1, 0.0}, {1.0, 0.0, 0.0}}) {
    auto spec = gender_spec(p);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto block = generate_block(spec, config, 20, seed);
      ASSERT_EQ(block.texts.size(), 20u);
      EXPECT_EQ(block.truth_counts(), expected_counts(spec, 40));
      for (const auto& truth : block.slot_truth) EXPECT_EQ(truth.size(), 2u);
    }
  }
}

TEST(GenerateBlock, DeterministicPerSeedAndVariesAcrossSeeds) {
  TemplateConfig config;
  auto spec = gender_spec({0.5, 0.5, 0.0});
  auto a = generate_block(spec, config, 20, 2017);
  auto b = generate_block(spec, config, 20, 2017);
  auto c = generate_block(spec, config, 20, 2018);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.texts, c.texts);
}

// The PRNG stream is fixed by the standard, so this exact output is stable
// across platforms and standard libraries.
TEST(GenerateBlock, PinnedOutputForFixedSeed) {
  SeededRng rng(42);
  std::vector<std::uint64_t> draws;
  for (int i = 0; i < 6; ++i) draws.push_back(rng.below(10));
  std::mt19937_64 reference(42);
  // below() rejects values past the largest multiple of the bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % 10;
  std::vector<std::uint64_t> expected;
  while (expected.size() < 6) {
    auto v = reference();
    if (v < limit) expected.push_back(v % 10);
  }
  EXPECT_EQ(draws, expected);
}

TEST(GenerateBlock, OccupationsDistinctWithinText) {
  TemplateConfig config;
  config.sentences_per_text = 3;
  config.occupations = {"Baker", "Judge", "Nurse"};
  auto block = generate_block(gender_spec({0.5, 0.5, 0.0}), config, 30, 5);
  for (const auto& text : block.texts) {
    std::set<std::string> seen;
    for (const auto& occ : config.occupations)
      if (text.find(occ) != std::string::npos) seen.insert(occ);
    EXPECT_EQ(seen.size(), 3u) << text;
  }
}

TEST(GenerateBlock, RejectsUnrealizableRequests) {
  TemplateConfig config;
  EXPECT_THROW(generate_block(gender_spec({0.4, 0.4, 0.2}), config, 20, 1), SpecError);
  EXPECT_THROW(generate_block(gender_spec({0.5, 0.5, 0.0}), config, 0, 1), ConfigError);
  config.occupations = {"Baker"};
  EXPECT_THROW(generate_block(gender_spec({0.5, 0.5, 0.0}), config, 20, 1), ConfigError);
  TemplateConfig missing_word;
  missing_word.gender_words.erase("She");
  EXPECT_THROW(generate_block(gender_spec({0.5, 0.5, 0.0}), missing_word, 20, 1), ConfigError);
}

TEST(DeriveSeed, DistinctPerBlockAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(2017, k));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(2017, 3), derive_seed(2017, 3));
  EXPECT_NE(derive_seed(2017, 0), derive_seed(2018, 0));
}

TEST(TemplateConfig, JsonRoundTrip) {
  TemplateConfig t;
  t.sentence_template = "{G} works as a {O}.";
  t.sentences_per_text = 3;
  t.occupations = {"Baker", "Judge", "Nurse"};
  auto back = template_from_json(json(t));
  EXPECT_EQ(back.sentence_template, t.sentence_template);
  EXPECT_EQ(back.sentences_per_text, 3u);
  EXPECT_EQ(back.occupations, t.occupations);
  EXPECT_EQ(back.gender_words, t.gender_words);
  EXPECT_THROW(template_from_json(json{{"sentences_per_text", 0}}), ConfigError);
}

}  // namespace
}  // namespace biasrate
