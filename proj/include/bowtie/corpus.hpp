#pragma once

// Ingestion of the two IMDB review corpora into labeled bags of words.
//
// SLMRD ships `imdb.vocab`, `imdbEr.txt` and per-split `labeledBow.feat`
// files. KID ships a token -> rank JSON map plus integer sequences; the
// sequences are expected in the text export written by tools/export_kid.py
// (one `split<TAB>label<TAB>v v v ...` record per line).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bowtie {

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws DataError on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // Index of `token`, or -1 when absent.
  std::int64_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token) >= 0; }

  // "<size>:<16 hex digit FNV-1a hash of the newline-joined tokens>".
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string fingerprint_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

struct PolarityTable {
  std::vector<double> ratings;
  std::size_t size() const noexcept { return ratings.size(); }
};

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1 };

struct LabeledBag {
  // Strictly increasing token index, count >= 1.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
  Label label = Label::kNegative;

  std::uint64_t token_count() const;
  friend bool operator==(const LabeledBag&, const LabeledBag&) = default;
  friend auto operator<=>(const LabeledBag&, const LabeledBag&) = default;
};

enum class Split { kTrain, kTest, kAll };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Corpus {
  std::vector<LabeledBag> bags;
  std::string vocab_id;  // Vocabulary::fingerprint() of the index space
  Split split = Split::kAll;

  std::size_t size() const noexcept { return bags.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Checks every bag against the LabeledBag invariants for a vocabulary of
// `vocab_size` tokens. Throws DataError naming the first offending bag.
void validate(const Corpus& corpus, std::size_t vocab_size);

Vocabulary load_slmrd_vocab(const std::filesystem::path& path);
PolarityTable load_polarity(const std::filesystem::path& path, const Vocabulary& vocab);
Corpus load_slmrd_bow(const std::filesystem::path& path, const Vocabulary& vocab,
                      Split split = Split::kAll);

// Parses one `labeledBow.feat` line. `line_no` is only used in messages.
LabeledBag parse_feat_line(std::string_view line, std::size_t vocab_size, std::size_t line_no = 0);

struct KidData {
  Vocabulary vocab;
  Corpus train;
  Corpus test;

  // Train followed by test.
  Corpus all() const;
};

inline constexpr int kDefaultKidIndexOffset = 3;

// Vocabulary index of a token is its rank from the word-index map. Ranks the
// map does not cover (rank 0 in the Keras export) get a placeholder token
// "<unused:N>" so the index space stays dense. Stored sequence values are
// mapped to ranks by subtracting `index_offset`; values below the offset are
// control symbols and are dropped.
Vocabulary load_kid_vocab(const std::filesystem::path& word_index_path);
KidData load_kid(const std::filesystem::path& word_index_path,
                 const std::filesystem::path& sequences_path,
                 int index_offset = kDefaultKidIndexOffset);
bool is_placeholder_token(std::string_view token);

// Folds an integer sequence into a bag. Values < offset are skipped.
LabeledBag fold_sequence(const std::vector<std::int64_t>& values, int index_offset,
                         std::size_t vocab_size, Label label);

std::vector<std::string> tokenize_raw(std::string_view text);

// Deterministic Fisher-Yates permutation of the bags.
Corpus shuffle(Corpus corpus, std::uint64_t seed);

// Canonical line format: `label<TAB>idx:count idx:count ...`, ascending idx.
void write_canonical(std::ostream& out, const Corpus& corpus);
void write_canonical(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_canonical(std::istream& in, const Vocabulary& vocab, Split split = Split::kAll);
Corpus read_canonical(const std::filesystem::path& path, const Vocabulary& vocab,
                      Split split = Split::kAll);

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
void write_polarity(const std::filesystem::path& path, const PolarityTable& table);

}  // namespace bowtie
