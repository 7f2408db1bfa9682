#pragma once

// Sparse input encodings of a labeled bag of words.
//
//   multi-hot:          x_k = 1               if token k occurs in the review
//   polarity-weighted:  x_k = xi_k * c_k      (token polarity times count)
//
// Rows are stored as sorted (column, value) pairs; zero values are implicit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bowtie/corpus.hpp"

namespace bowtie {

struct SparseExample {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::uint32_t width = 0;
  Label label = Label::kNegative;

  double label_value() const { return label == Label::kPositive ? 1.0 : 0.0; }
  friend bool operator==(const SparseExample&, const SparseExample&) = default;
};

enum class EncodingKind { kMultiHot, kPolarityWeighted };
std::string_view to_string(EncodingKind kind);
EncodingKind parse_encoding(std::string_view text);

struct EncodedDataset {
  std::vector<SparseExample> examples;
  std::uint32_t width = 0;
  EncodingKind kind = EncodingKind::kMultiHot;
  std::string vocab_id;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
};

SparseExample multi_hot(const LabeledBag& bag, std::uint32_t width);
SparseExample polarity_weighted(const LabeledBag& bag, const PolarityTable& polarity,
                                std::uint32_t width);

EncodedDataset encode_corpus(const Corpus& corpus, std::uint32_t width, EncodingKind kind,
                             const PolarityTable* polarity = nullptr);

struct PolarityStats {
  double element_min = 0.0;
  double element_max = 0.0;
  double rowsum_min = 0.0;
  double rowsum_max = 0.0;
};

PolarityStats polarity_stats(const EncodedDataset& dataset);

// `label<TAB>idx:value ...` with values at 9 significant digits.
void dump_encoded(std::ostream& out, const EncodedDataset& dataset);
void dump_encoded(const std::filesystem::path& path, const EncodedDataset& dataset);

}  // namespace bowtie
