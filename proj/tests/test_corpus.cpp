#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "bowtie/corpus.hpp"
#include "bowtie/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

namespace bowtie {
namespace {

using testing::TempDir;
using Counts = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

TEST(Vocabulary, PreservesFileOrder) {
  TempDir dir;
  const auto vocab = load_slmrd_vocab(dir.write("v", "a\nb\nc\n"));
  ASSERT_EQ(vocab.size(), 3u);
  EXPECT_EQ(vocab.index_of("a"), 0);
  EXPECT_EQ(vocab.index_of("b"), 1);
  EXPECT_EQ(vocab.index_of("c"), 2);
  EXPECT_EQ(vocab.index_of("d"), -1);
  EXPECT_EQ(vocab.token(2), "c");
}

TEST(Vocabulary, DuplicateTokenReportsBothLines) {
  TempDir dir;
  try {
    load_slmrd_vocab(dir.write("v", "a\na\n"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("'a'"), std::string::npos) << what;
    EXPECT_NE(what.find("lines 1,2"), std::string::npos) << what;
  }
}

TEST(Vocabulary, EmptyAndMissingFiles) {
  TempDir dir;
  EXPECT_THROW(load_slmrd_vocab(dir.write("v", "")), DataError);
  EXPECT_THROW(load_slmrd_vocab(dir / "absent"), DataError);
}

TEST(Vocabulary, FingerprintDependsOnContentAndOrder) {
  const Vocabulary ab({"a", "b"});
  const Vocabulary ba({"b", "a"});
  EXPECT_EQ(ab.fingerprint(), Vocabulary({"a", "b"}).fingerprint());
  EXPECT_NE(ab.fingerprint(), ba.fingerprint());
  EXPECT_TRUE(ab.fingerprint().starts_with("2:"));
}

TEST(Polarity, ParsesAlignedRatings) {
  TempDir dir;
  const Vocabulary vocab({"x", "y"});
  const auto table = load_polarity(dir.write("er", "0.5\n-1.25\n"), vocab);
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table.ratings[0], 0.5);
  EXPECT_EQ(table.ratings[1], -1.25);
}

TEST(Polarity, LengthMismatchReportsBothCounts) {
  TempDir dir;
  const Vocabulary vocab({"x", "y"});
  try {
    load_polarity(dir.write("er", "1\n2\n3\n"), vocab);
    FAIL();
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("3 entries"), std::string::npos) << what;
    EXPECT_NE(what.find("has 2"), std::string::npos) << what;
  }
}

TEST(Polarity, UnparseableLineReportsLineNumber) {
  TempDir dir;
  const Vocabulary vocab({"x", "y"});
  try {
    load_polarity(dir.write("er", "1\nabc\n"), vocab);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Feat, PositiveAndNegativeLines) {
  const auto pos = parse_feat_line("10 0:2 5:1", 10);
  EXPECT_EQ(pos.counts, (Counts{{0, 2}, {5, 1}}));
  EXPECT_EQ(pos.label, Label::kPositive);
  const auto neg = parse_feat_line("1 3:4", 10);
  EXPECT_EQ(neg.counts, (Counts{{3, 4}}));
  EXPECT_EQ(neg.label, Label::kNegative);
}

TEST(Feat, SortsUnorderedPairs) {
  const auto bag = parse_feat_line("8 7:1 2:3", 10);
  EXPECT_EQ(bag.counts, (Counts{{2, 3}, {7, 1}}));
}

TEST(Feat, Errors) {
  EXPECT_THROW(parse_feat_line("5 1:1", 10), DataError);
  EXPECT_THROW(parse_feat_line("6 1:1", 10), DataError);
  EXPECT_THROW(parse_feat_line("9 1-1", 10), DataError);
  EXPECT_THROW(parse_feat_line("9 1:", 10), DataError);
  EXPECT_THROW(parse_feat_line("9 1:0", 10), DataError);
  EXPECT_THROW(parse_feat_line("9 10:1", 10), DataError);
  EXPECT_THROW(parse_feat_line("x 1:1", 10), DataError);
}

TEST(Feat, CountSumMatchesLine) {
  const std::string line = "3 0:4 1:1 9:7";
  EXPECT_EQ(parse_feat_line(line, 10).token_count(), 12u);
}

TEST(Kid, FoldsSequenceByCounting) {
  const auto bag = fold_sequence({7, 7, 12}, 0, 20, Label::kPositive);
  EXPECT_EQ(bag.counts, (Counts{{7, 2}, {12, 1}}));
  EXPECT_EQ(bag.label, Label::kPositive);
}

TEST(Kid, OffsetDropsControlSymbols) {
  const auto bag = fold_sequence({1, 2, 0, 5, 5, 4}, 3, 10, Label::kNegative);
  EXPECT_EQ(bag.counts, (Counts{{1, 1}, {2, 2}}));
}

TEST(Kid, RankOutsideVocabularyIsAnError) {
  EXPECT_THROW(fold_sequence({3 + 10}, 3, 10, Label::kNegative), DataError);
}

TEST(Kid, LoadsWordIndexAndSequences) {
  TempDir dir;
  dir.write("wi.json", R"({"the": 1, "movie": 2, "great": 3})");
  dir.write("seq.tsv",
            "train\t1\t1 4 5 6 6\n"
            "test\t0\t1 5 2\n");
  const auto kid = load_kid(dir / "wi.json", dir / "seq.tsv", 3);
  // Rank 0 is not in the map, so index 0 is a placeholder.
  ASSERT_EQ(kid.vocab.size(), 4u);
  EXPECT_TRUE(is_placeholder_token(kid.vocab.token(0)));
  EXPECT_EQ(kid.vocab.index_of("great"), 3);
  ASSERT_EQ(kid.train.size(), 1u);
  EXPECT_EQ(kid.train.bags[0].counts, (Counts{{1, 1}, {2, 1}, {3, 2}}));
  EXPECT_EQ(kid.train.bags[0].label, Label::kPositive);
  ASSERT_EQ(kid.test.size(), 1u);
  EXPECT_EQ(kid.test.bags[0].counts, (Counts{{2, 1}}));
  EXPECT_EQ(kid.all().size(), 2u);
  EXPECT_EQ(kid.train.vocab_id, kid.vocab.fingerprint());
}

TEST(Kid, MissingLabelAndBadRank) {
  TempDir dir;
  dir.write("wi.json", R"({"a": 1})");
  dir.write("nolabel.tsv", "train\t\t4\n");
  dir.write("badrank.tsv", "train\t1\t9\n");
  dir.write("dup.json", R"({"a": 1, "b": 1})");
  EXPECT_THROW(load_kid(dir / "wi.json", dir / "nolabel.tsv"), DataError);
  EXPECT_THROW(load_kid(dir / "wi.json", dir / "badrank.tsv"), DataError);
  EXPECT_THROW(load_kid_vocab(dir / "dup.json"), DataError);
}

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize_raw("Great movie!<br />Loved it."),
            (std::vector<std::string>{"great", "movie", "loved", "it"}));
  EXPECT_TRUE(tokenize_raw("").empty());
  EXPECT_EQ(tokenize_raw("don't stop"), (std::vector<std::string>{"don't", "stop"}));
  EXPECT_EQ(tokenize_raw("a<br/>b"), (std::vector<std::string>{"a", "b"}));
}

Corpus random_corpus(std::uint64_t seed, std::size_t n, std::uint32_t width = 40) {
  std::mt19937_64 rng(seed);
  Corpus corpus;
  for (std::size_t i = 0; i < n; ++i) corpus.bags.push_back(oracle::random_bag(rng, width));
  corpus.vocab_id = "test";
  return corpus;
}

TEST(Shuffle, DeterministicPermutation) {
  const auto corpus = random_corpus(1, 200);
  const auto a = shuffle(corpus, 42);
  const auto b = shuffle(corpus, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.bags, corpus.bags);
  EXPECT_NE(shuffle(corpus, 43).bags, a.bags);

  auto sorted_before = corpus.bags;
  auto sorted_after = a.bags;
  std::sort(sorted_before.begin(), sorted_before.end());
  std::sort(sorted_after.begin(), sorted_after.end());
  EXPECT_EQ(sorted_before, sorted_after);
}

TEST(Shuffle, EmptyCorpus) { EXPECT_TRUE(shuffle(Corpus{}, 9).bags.empty()); }

TEST(Shuffle, LabelCountsUnchanged) {
  Corpus corpus;
  for (int i = 0; i < 25000; ++i) {
    LabeledBag bag;
    bag.label = i % 2 ? Label::kPositive : Label::kNegative;
    bag.counts = {{static_cast<std::uint32_t>(i % 100), 1}};
    corpus.bags.push_back(bag);
  }
  const auto shuffled = shuffle(corpus, 2024);
  std::size_t positives = 0;
  for (const auto& bag : shuffled.bags) positives += bag.label == Label::kPositive;
  EXPECT_EQ(positives, 12500u);
  EXPECT_EQ(shuffled.size() - positives, 12500u);
}

TEST(Canonical, RoundTripProperty) {
  const Vocabulary vocab([] {
    std::vector<std::string> t;
    for (int i = 0; i < 40; ++i) t.push_back("t" + std::to_string(i));
    return t;
  }());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto corpus = random_corpus(seed, 1 + seed * 3);
    corpus.vocab_id = vocab.fingerprint();
    std::stringstream buffer;
    write_canonical(buffer, corpus);
    const auto reloaded = read_canonical(buffer, vocab);
    EXPECT_EQ(reloaded, corpus) << "seed " << seed;
  }
}

TEST(Canonical, LineFormat) {
  Corpus corpus;
  corpus.bags.push_back({{{0, 2}, {5, 1}}, Label::kPositive});
  corpus.bags.push_back({{}, Label::kNegative});
  std::stringstream out;
  write_canonical(out, corpus);
  EXPECT_EQ(out.str(), "1\t0:2 5:1\n0\t\n");
}

TEST(Canonical, RejectsBadRecords) {
  const Vocabulary vocab({"a", "b"});
  std::stringstream bad_label("2\t0:1\n");
  EXPECT_THROW(read_canonical(bad_label, vocab), DataError);
  std::stringstream out_of_range("1\t2:1\n");
  EXPECT_THROW(read_canonical(out_of_range, vocab), DataError);
}

TEST(Validate, DetectsBrokenInvariants) {
  Corpus corpus;
  corpus.bags.push_back({{{3, 1}, {1, 1}}, Label::kPositive});
  EXPECT_THROW(validate(corpus, 10), DataError);
  corpus.bags[0].counts = {{1, 0}};
  EXPECT_THROW(validate(corpus, 10), DataError);
  corpus.bags[0].counts = {{1, 1}, {9, 2}};
  EXPECT_NO_THROW(validate(corpus, 10));
}

TEST(Slmrd, SyntheticDistributionLoads) {
  TempDir dir;
  synthetic::Options opt;
  synthetic::write_slmrd(dir.path(), opt);
  const auto vocab = load_slmrd_vocab(dir / "imdb.vocab");
  const auto polarity = load_polarity(dir / "imdbEr.txt", vocab);
  const auto train = load_slmrd_bow(dir.path() / "train" / "labeledBow.feat", vocab, Split::kTrain);
  EXPECT_EQ(vocab.size(), opt.vocab);
  EXPECT_EQ(polarity.size(), opt.vocab);
  EXPECT_EQ(train.size(), opt.slmrd_per_split);
  EXPECT_EQ(train.positives(), opt.slmrd_per_split / 2);
  EXPECT_NO_THROW(validate(train, vocab.size()));
  for (const auto& bag : train.bags) EXPECT_EQ(bag.token_count(), opt.review_length);
}

}  // namespace
}  // namespace bowtie
