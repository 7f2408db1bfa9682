#pragma once

// Scoring an SLMRD-trained model on KID reviews: KID tokens are matched to
// SLMRD tokens by exact string equality, unmatched tokens are dropped, and
// the remapped bags are encoded with SLMRD polarity ratings.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bowtie/corpus.hpp"
#include "bowtie/encode.hpp"
#include "bowtie/train.hpp"

namespace bowtie {

struct VocabMap {
  // target[k] is the SLMRD index of KID token k, or -1 when it was dropped.
  std::vector<std::int64_t> target;
  std::vector<std::string> dropped;  // sorted
  std::size_t mapped = 0;
  std::size_t target_size = 0;
  std::string target_vocab_id;
};

VocabMap build_vocab_map(const Vocabulary& kid_vocab, const Vocabulary& slmrd_vocab);

// Rewrites a KID bag into SLMRD indices; dropped tokens vanish and tokens
// that land on the same index have their counts summed.
LabeledBag remap_bag(const LabeledBag& bag, const VocabMap& map);

EncodedDataset reencode_kid(const Corpus& kid_corpus, const VocabMap& map,
                            const PolarityTable& polarity);

struct TransferReport {
  Evaluation evaluation;
  std::size_t examples = 0;
  std::size_t empty_examples = 0;  // reviews left with no encoded entries
  std::size_t mapped_tokens = 0;
  std::vector<std::string> dropped;
  PolarityStats stats;
};

TransferReport transfer_evaluate(const Checkpoint& checkpoint, const EncodedDataset& kid_dataset,
                                 const VocabMap& map, unsigned threads = 1);
TransferReport transfer_evaluate(const std::filesystem::path& checkpoint_path,
                                 const EncodedDataset& kid_dataset, const VocabMap& map,
                                 unsigned threads = 1);

// Dropped tokens one per line, then a `key=value` footer.
void write_report(std::ostream& out, const TransferReport& report);
void write_report(const std::filesystem::path& path, const TransferReport& report);

}  // namespace bowtie
