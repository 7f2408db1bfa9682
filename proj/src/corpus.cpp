#include "bowtie/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <cmath>
#include <cstdio>
#include <span>

#include <json.hpp>

#include "bowtie/error.hpp"
#include "bowtie/random.hpp"

namespace bowtie {

namespace {

constexpr std::string_view kPlaceholderPrefix = "<unused:";

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

std::string where(std::size_t line_no) {
  return line_no > 0 ? "line " + std::to_string(line_no) + ": " : std::string();
}

// Parses "idx:count" pairs, sorts them and merges repeated indices.
void parse_pairs(std::span<const std::string_view> fields, std::size_t vocab_size,
                 std::size_t line_no, LabeledBag& bag) {
  bag.counts.clear();
  bag.counts.reserve(fields.size());
  for (auto field : fields) {
    const auto colon = field.find(':');
    std::uint32_t index = 0;
    std::uint32_t count = 0;
    if (colon == std::string_view::npos || !parse_int(field.substr(0, colon), index) ||
        !parse_int(field.substr(colon + 1), count) || count == 0) {
      throw DataError(where(line_no) + "malformed pair '" + std::string(field) + "'");
    }
    if (index >= vocab_size) {
      throw DataError(where(line_no) + "token index " + std::to_string(index) +
                      " out of range for vocabulary of " + std::to_string(vocab_size));
    }
    bag.counts.emplace_back(index, count);
  }
  std::sort(bag.counts.begin(), bag.counts.end());
  std::size_t out = 0;
  for (std::size_t i = 0; i < bag.counts.size(); ++i) {
    if (out > 0 && bag.counts[out - 1].first == bag.counts[i].first) {
      bag.counts[out - 1].second += bag.counts[i].second;
    } else {
      bag.counts[out++] = bag.counts[i];
    }
  }
  bag.counts.resize(out);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], i);
    if (!inserted) {
      throw DataError("duplicate token '" + tokens_[i] + "' at lines " +
                      std::to_string(it->second + 1) + "," + std::to_string(i + 1));
    }
    hash = fnv1a64(tokens_[i], hash);
    hash = fnv1a64("\n", hash);
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  fingerprint_ = std::to_string(tokens_.size()) + ":" + hex;
}

std::int64_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::uint64_t LabeledBag::token_count() const {
  std::uint64_t total = 0;
  for (const auto& [index, count] : counts) total += count;
  return total;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kAll: return "all";
  }
  return "all";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "all") return Split::kAll;
  throw DataError("unknown split '" + std::string(text) + "'");
}

std::size_t Corpus::positives() const {
  return static_cast<std::size_t>(std::count_if(
      bags.begin(), bags.end(), [](const LabeledBag& b) { return b.label == Label::kPositive; }));
}

void validate(const Corpus& corpus, std::size_t vocab_size) {
  for (std::size_t b = 0; b < corpus.bags.size(); ++b) {
    const auto& counts = corpus.bags[b].counts;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const auto [index, count] = counts[i];
      if (index >= vocab_size || count == 0 || (i > 0 && counts[i - 1].first >= index)) {
        throw DataError("bag " + std::to_string(b) + " violates index/count invariants at entry " +
                        std::to_string(i));
      }
    }
  }
}

Vocabulary load_slmrd_vocab(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) {
      throw DataError(path.string() + ": empty token at line " + std::to_string(tokens.size() + 1));
    }
    tokens.push_back(std::move(line));
  }
  if (tokens.empty()) throw DataError(path.string() + ": empty vocabulary file");
  try {
    return Vocabulary(std::move(tokens));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

PolarityTable load_polarity(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = open_input(path);
  PolarityTable table;
  table.ratings.reserve(vocab.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    auto fields = split_ws(line);
    double value = 0.0;
    if (fields.size() != 1) {
      throw DataError(path.string() + ": unparseable rating at line " + std::to_string(line_no));
    }
    const auto field = fields.front();
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
      throw DataError(path.string() + ": unparseable rating at line " + std::to_string(line_no));
    }
    table.ratings.push_back(value);
  }
  if (table.size() != vocab.size()) {
    throw DataError(path.string() + ": polarity table has " + std::to_string(table.size()) +
                    " entries but vocabulary has " + std::to_string(vocab.size()));
  }
  return table;
}

LabeledBag parse_feat_line(std::string_view line, std::size_t vocab_size, std::size_t line_no) {
  auto fields = split_ws(line);
  if (fields.empty()) throw DataError(where(line_no) + "empty record");
  int rating = 0;
  if (!parse_int(fields.front(), rating)) {
    throw DataError(where(line_no) + "malformed rating '" + std::string(fields.front()) + "'");
  }
  LabeledBag bag;
  if (rating >= 7) {
    bag.label = Label::kPositive;
  } else if (rating <= 4) {
    bag.label = Label::kNegative;
  } else {
    throw DataError(where(line_no) + "neutral rating " + std::to_string(rating) +
                    " has no binary label");
  }
  parse_pairs(std::span(fields).subspan(1), vocab_size, line_no, bag);
  return bag;
}

Corpus load_slmrd_bow(const std::filesystem::path& path, const Vocabulary& vocab, Split split) {
  auto in = open_input(path);
  Corpus corpus;
  corpus.vocab_id = vocab.fingerprint();
  corpus.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    try {
      corpus.bags.push_back(parse_feat_line(line, vocab.size(), line_no));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return corpus;
}

bool is_placeholder_token(std::string_view token) {
  return token.starts_with(kPlaceholderPrefix) && token.ends_with('>');
}

Vocabulary load_kid_vocab(const std::filesystem::path& word_index_path) {
  auto in = open_input(word_index_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(word_index_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.empty()) {
    throw DataError(word_index_path.string() + ": expected a nonempty token -> rank object");
  }
  std::map<std::int64_t, std::string> by_rank;
  for (const auto& [token, rank] : doc.items()) {
    if (!rank.is_number_integer() || rank.get<std::int64_t>() < 0) {
      throw DataError(word_index_path.string() + ": rank of '" + token +
                      "' is not a nonnegative integer");
    }
    auto [it, inserted] = by_rank.emplace(rank.get<std::int64_t>(), token);
    if (!inserted) {
      throw DataError(word_index_path.string() + ": rank " + std::to_string(it->first) +
                      " assigned to both '" + it->second + "' and '" + token + "'");
    }
  }
  const auto size = static_cast<std::size_t>(by_rank.rbegin()->first) + 1;
  std::vector<std::string> tokens(size);
  for (std::size_t r = 0; r < size; ++r) {
    auto it = by_rank.find(static_cast<std::int64_t>(r));
    tokens[r] = it != by_rank.end() ? it->second
                                    : std::string(kPlaceholderPrefix) + std::to_string(r) + ">";
  }
  return Vocabulary(std::move(tokens));
}

LabeledBag fold_sequence(const std::vector<std::int64_t>& values, int index_offset,
                         std::size_t vocab_size, Label label) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (auto value : values) {
    if (value < index_offset) continue;
    const auto rank = value - index_offset;
    if (rank >= static_cast<std::int64_t>(vocab_size)) {
      throw DataError("sequence value " + std::to_string(value) + " maps to rank " +
                      std::to_string(rank) + " outside [0, " + std::to_string(vocab_size) + ")");
    }
    ++counts[static_cast<std::uint32_t>(rank)];
  }
  LabeledBag bag;
  bag.label = label;
  bag.counts.assign(counts.begin(), counts.end());
  return bag;
}

Corpus KidData::all() const {
  Corpus merged;
  merged.vocab_id = vocab.fingerprint();
  merged.split = Split::kAll;
  merged.bags.reserve(train.size() + test.size());
  merged.bags.insert(merged.bags.end(), train.bags.begin(), train.bags.end());
  merged.bags.insert(merged.bags.end(), test.bags.begin(), test.bags.end());
  return merged;
}

KidData load_kid(const std::filesystem::path& word_index_path,
                 const std::filesystem::path& sequences_path, int index_offset) {
  if (index_offset < 0) throw DataError("index offset must be nonnegative");
  KidData data;
  data.vocab = load_kid_vocab(word_index_path);
  data.train.vocab_id = data.test.vocab_id = data.vocab.fingerprint();
  data.train.split = Split::kTrain;
  data.test.split = Split::kTest;

  auto in = open_input(sequences_path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::int64_t> values;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto context = sequences_path.string() + ": " + where(line_no);
    std::string_view view(line);
    const auto tab1 = view.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : view.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw DataError(context + "expected 'split<TAB>label<TAB>sequence'");
    }
    const auto split_field = view.substr(0, tab1);
    const auto label_field = view.substr(tab1 + 1, tab2 - tab1 - 1);
    if (label_field != "0" && label_field != "1") throw DataError(context + "missing label");
    Split split;
    try {
      split = parse_split(split_field);
    } catch (const DataError& e) {
      throw DataError(context + e.what());
    }
    if (split == Split::kAll) throw DataError(context + "split must be train or test");

    values.clear();
    for (auto field : split_ws(view.substr(tab2 + 1))) {
      std::int64_t value = 0;
      if (!parse_int(field, value)) {
        throw DataError(context + "malformed sequence value '" + std::string(field) + "'");
      }
      values.push_back(value);
    }
    const Label label = label_field == "1" ? Label::kPositive : Label::kNegative;
    try {
      auto bag = fold_sequence(values, index_offset, data.vocab.size(), label);
      (split == Split::kTrain ? data.train : data.test).bags.push_back(std::move(bag));
    } catch (const DataError& e) {
      throw DataError(context + e.what());
    }
  }
  return data;
}

std::vector<std::string> tokenize_raw(std::string_view text) {
  std::string cleaned(text);
  // Drop HTML line-break markup such as "<br />" and "<br/>".
  for (std::size_t pos = 0; (pos = cleaned.find("<br", pos)) != std::string::npos;) {
    const auto close = cleaned.find('>', pos);
    if (close == std::string::npos) break;
    cleaned.replace(pos, close - pos + 1, " ");
  }
  std::vector<std::string> tokens;
  std::string current;
  for (char c : cleaned) {
    const auto u = static_cast<unsigned char>(c);
    // Bytes >= 0x80 belong to UTF-8 sequences and are kept as word characters.
    if (std::isalnum(u) || c == '\'' || u >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Corpus shuffle(Corpus corpus, std::uint64_t seed) {
  Rng rng(seed);
  auto& bags = corpus.bags;
  for (std::size_t i = bags.size(); i > 1; --i) {
    const auto j = uniform_below(rng, i);
    std::swap(bags[i - 1], bags[j]);
  }
  return corpus;
}

void write_canonical(std::ostream& out, const Corpus& corpus) {
  for (const auto& bag : corpus.bags) {
    out << static_cast<int>(bag.label) << '\t';
    for (std::size_t i = 0; i < bag.counts.size(); ++i) {
      if (i > 0) out << ' ';
      out << bag.counts[i].first << ':' << bag.counts[i].second;
    }
    out << '\n';
  }
}

void write_canonical(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_canonical(out, corpus);
  if (!out) throw DataError("failed writing " + path.string());
}

Corpus read_canonical(std::istream& in, const Vocabulary& vocab, Split split) {
  Corpus corpus;
  corpus.vocab_id = vocab.fingerprint();
  corpus.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string_view view(line);
    if (tab == std::string::npos || (view.substr(0, tab) != "0" && view.substr(0, tab) != "1")) {
      throw DataError(where(line_no) + "expected 'label<TAB>idx:count ...'");
    }
    LabeledBag bag;
    bag.label = view[0] == '1' ? Label::kPositive : Label::kNegative;
    auto fields = split_ws(view.substr(tab + 1));
    parse_pairs(fields, vocab.size(), line_no, bag);
    corpus.bags.push_back(std::move(bag));
  }
  return corpus;
}

Corpus read_canonical(const std::filesystem::path& path, const Vocabulary& vocab, Split split) {
  auto in = open_input(path);
  try {
    return read_canonical(in, vocab, split);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto out = open_output(path);
  for (const auto& token : vocab.tokens()) out << token << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

void write_polarity(const std::filesystem::path& path, const PolarityTable& table) {
  auto out = open_output(path);
  char buf[32];
  for (double value : table.ratings) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.write(buf, ptr - buf);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace bowtie
