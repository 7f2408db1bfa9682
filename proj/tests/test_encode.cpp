#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "bowtie/encode.hpp"
#include "bowtie/error.hpp"
#include "oracles.hpp"

namespace bowtie {
namespace {

using Entries = std::vector<std::pair<std::uint32_t, double>>;

TEST(MultiHot, IgnoresCounts) {
  const LabeledBag bag{{{0, 2}, {5, 1}}, Label::kPositive};
  const auto x = multi_hot(bag, 10);
  EXPECT_EQ(x.entries, (Entries{{0, 1.0}, {5, 1.0}}));
  EXPECT_EQ(x.width, 10u);
  EXPECT_EQ(x.label, Label::kPositive);
}

TEST(MultiHot, EmptyBagIsZeroRow) {
  EXPECT_TRUE(multi_hot(LabeledBag{}, 10).entries.empty());
}

TEST(MultiHot, IndexOutOfRange) {
  EXPECT_THROW(multi_hot(LabeledBag{{{10, 1}}, Label::kNegative}, 10), DataError);
}

TEST(PolarityWeighted, ProductOfRatingAndCount) {
  PolarityTable xi{std::vector<double>(5, 0.0)};
  xi.ratings[3] = -1.25;
  const LabeledBag bag{{{3, 4}}, Label::kNegative};
  EXPECT_EQ(polarity_weighted(bag, xi, 5).entries, (Entries{{3, -5.0}}));
}

TEST(PolarityWeighted, ZeroRatingIsImplicit) {
  PolarityTable xi{std::vector<double>(5, 0.0)};
  const LabeledBag bag{{{3, 4}}, Label::kNegative};
  EXPECT_TRUE(polarity_weighted(bag, xi, 5).entries.empty());
}

TEST(PolarityWeighted, Errors) {
  PolarityTable xi{std::vector<double>(5, 1.0)};
  EXPECT_THROW(polarity_weighted(LabeledBag{{{5, 1}}, Label::kNegative}, xi, 5), DataError);
  EXPECT_THROW(polarity_weighted(LabeledBag{{{1, 1}}, Label::kNegative}, xi, 6), DataError);
  xi.ratings[2] = std::numeric_limits<double>::max();
  EXPECT_THROW(polarity_weighted(LabeledBag{{{2, 3}}, Label::kNegative}, xi, 5), DataError);
}

TEST(PolarityWeighted, EqualsMultiHotForUnitRatingsAndCounts) {
  std::mt19937_64 rng(3);
  PolarityTable ones{std::vector<double>(50, 1.0)};
  for (int trial = 0; trial < 200; ++trial) {
    auto bag = oracle::random_bag(rng, 50, 1);
    EXPECT_EQ(polarity_weighted(bag, ones, 50), multi_hot(bag, 50));
  }
}

// Both encoders against a dense row built directly from the bag.
TEST(Encoders, MatchDenseOracleOnRandomBags) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint32_t> width_dist(1, 50);
  std::uniform_real_distribution<double> rating(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto width = width_dist(rng);
    const auto bag = oracle::random_bag(rng, width);
    PolarityTable xi;
    for (std::uint32_t k = 0; k < width; ++k) {
      xi.ratings.push_back(trial % 4 == 0 && k % 3 == 0 ? 0.0 : rating(rng));
    }
    const auto hot = multi_hot(bag, width);
    const auto weighted = polarity_weighted(bag, xi, width);
    ASSERT_EQ(oracle::densify(hot), oracle::dense_multi_hot(bag, width)) << "trial " << trial;
    ASSERT_EQ(oracle::densify(weighted), oracle::dense_weighted(bag, xi, width)) << "trial " << trial;
    EXPECT_EQ(hot.entries.size(), bag.counts.size());
    EXPECT_LE(weighted.entries.size(), bag.counts.size());
    for (const auto& [index, value] : weighted.entries) EXPECT_NE(value, 0.0);
    for (std::size_t i = 1; i < weighted.entries.size(); ++i) {
      EXPECT_LT(weighted.entries[i - 1].first, weighted.entries[i].first);
    }
  }
}

TEST(EncodeCorpus, PreservesOrderAndLabels) {
  std::mt19937_64 rng(5);
  Corpus corpus;
  corpus.vocab_id = "v";
  for (int i = 0; i < 30; ++i) corpus.bags.push_back(oracle::random_bag(rng, 20));
  PolarityTable xi{std::vector<double>(20, 0.5)};
  const auto data = encode_corpus(corpus, 20, EncodingKind::kPolarityWeighted, &xi);
  ASSERT_EQ(data.size(), corpus.size());
  EXPECT_EQ(data.vocab_id, "v");
  EXPECT_EQ(data.kind, EncodingKind::kPolarityWeighted);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data.examples[i].label, corpus.bags[i].label);
    EXPECT_EQ(data.examples[i], polarity_weighted(corpus.bags[i], xi, 20));
    EXPECT_EQ(data.examples[i].width, 20u);
  }
}

TEST(EncodeCorpus, EmptyCorpusAndMissingPolarity) {
  EXPECT_TRUE(encode_corpus(Corpus{}, 10, EncodingKind::kMultiHot).empty());
  EXPECT_THROW(encode_corpus(Corpus{}, 10, EncodingKind::kPolarityWeighted), UsageError);
}

TEST(PolarityStats, SingleExample) {
  EncodedDataset data;
  data.width = 2;
  data.examples.push_back({{{0, 2.0}, {1, -3.0}}, 2, Label::kPositive});
  const auto s = polarity_stats(data);
  EXPECT_EQ(s.element_min, -3.0);
  EXPECT_EQ(s.element_max, 2.0);
  EXPECT_EQ(s.rowsum_min, -1.0);
  EXPECT_EQ(s.rowsum_max, -1.0);
}

TEST(PolarityStats, IdenticalRowsAndEmptyDataset) {
  EncodedDataset data;
  data.width = 3;
  data.examples.assign(2, SparseExample{{{0, 1.5}, {2, 0.25}}, 3, Label::kNegative});
  const auto s = polarity_stats(data);
  EXPECT_EQ(s.rowsum_min, s.rowsum_max);
  EXPECT_LE(s.element_min, s.element_max);
  EXPECT_THROW(polarity_stats(EncodedDataset{}), DataError);
}

TEST(Dump, NineSignificantDigits) {
  EncodedDataset data;
  data.examples.push_back({{{1, 1.0 / 3.0}, {4, -2.0}}, 5, Label::kPositive});
  std::stringstream out;
  dump_encoded(out, data);
  EXPECT_EQ(out.str(), "1\t1:0.333333333 4:-2\n");
}

TEST(EncodingKind, ParseRoundTrip) {
  for (auto kind : {EncodingKind::kMultiHot, EncodingKind::kPolarityWeighted}) {
    EXPECT_EQ(parse_encoding(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_encoding("tf-idf"), UsageError);
}

}  // namespace
}  // namespace bowtie
