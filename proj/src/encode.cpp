#include "bowtie/encode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "bowtie/error.hpp"

namespace bowtie {

namespace {

void check_range(std::uint32_t index, std::uint32_t width) {
  if (index >= width) {
    throw DataError("token index " + std::to_string(index) + " out of range for width " +
                    std::to_string(width));
  }
}

}  // namespace

std::string_view to_string(EncodingKind kind) {
  return kind == EncodingKind::kMultiHot ? "multi-hot" : "polarity-weighted";
}

EncodingKind parse_encoding(std::string_view text) {
  if (text == "multi-hot") return EncodingKind::kMultiHot;
  if (text == "polarity-weighted") return EncodingKind::kPolarityWeighted;
  throw UsageError("unknown encoding '" + std::string(text) +
                   "' (expected multi-hot or polarity-weighted)");
}

SparseExample multi_hot(const LabeledBag& bag, std::uint32_t width) {
  SparseExample example;
  example.width = width;
  example.label = bag.label;
  example.entries.reserve(bag.counts.size());
  for (const auto& [index, count] : bag.counts) {
    check_range(index, width);
    example.entries.emplace_back(index, 1.0);
  }
  return example;
}

SparseExample polarity_weighted(const LabeledBag& bag, const PolarityTable& polarity,
                                std::uint32_t width) {
  if (polarity.size() != width) {
    throw DataError("polarity table has " + std::to_string(polarity.size()) +
                    " entries but encoding width is " + std::to_string(width));
  }
  SparseExample example;
  example.width = width;
  example.label = bag.label;
  example.entries.reserve(bag.counts.size());
  for (const auto& [index, count] : bag.counts) {
    check_range(index, width);
    const double value = polarity.ratings[index] * static_cast<double>(count);
    if (!std::isfinite(value)) {
      throw DataError("non-finite weighted value at token index " + std::to_string(index));
    }
    if (value != 0.0) example.entries.emplace_back(index, value);
  }
  return example;
}

EncodedDataset encode_corpus(const Corpus& corpus, std::uint32_t width, EncodingKind kind,
                             const PolarityTable* polarity) {
  if (kind == EncodingKind::kPolarityWeighted && polarity == nullptr) {
    throw UsageError("polarity-weighted encoding requires a polarity table");
  }
  EncodedDataset dataset;
  dataset.width = width;
  dataset.kind = kind;
  dataset.vocab_id = corpus.vocab_id;
  dataset.examples.reserve(corpus.size());
  for (const auto& bag : corpus.bags) {
    dataset.examples.push_back(kind == EncodingKind::kMultiHot
                                   ? multi_hot(bag, width)
                                   : polarity_weighted(bag, *polarity, width));
  }
  return dataset;
}

PolarityStats polarity_stats(const EncodedDataset& dataset) {
  if (dataset.empty()) throw DataError("polarity statistics of an empty dataset");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  PolarityStats stats{kInf, -kInf, kInf, -kInf};
  for (const auto& example : dataset.examples) {
    double sum = 0.0;
    for (const auto& [index, value] : example.entries) {
      stats.element_min = std::min(stats.element_min, value);
      stats.element_max = std::max(stats.element_max, value);
      sum += value;
    }
    stats.rowsum_min = std::min(stats.rowsum_min, sum);
    stats.rowsum_max = std::max(stats.rowsum_max, sum);
  }
  // Every row was empty: the matrix is all zeros.
  if (stats.element_min > stats.element_max) stats.element_min = stats.element_max = 0.0;
  return stats;
}

void dump_encoded(std::ostream& out, const EncodedDataset& dataset) {
  char buf[40];
  for (const auto& example : dataset.examples) {
    out << (example.label == Label::kPositive ? '1' : '0') << '\t';
    for (std::size_t i = 0; i < example.entries.size(); ++i) {
      const int n = std::snprintf(buf, sizeof buf, "%s%u:%.9g", i > 0 ? " " : "",
                                  example.entries[i].first, example.entries[i].second);
      out.write(buf, n);
    }
    out << '\n';
  }
}

void dump_encoded(const std::filesystem::path& path, const EncodedDataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  dump_encoded(out, dataset);
}

}  // namespace bowtie
