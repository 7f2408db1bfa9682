#include "bowtie/transfer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "bowtie/error.hpp"

namespace bowtie {

VocabMap build_vocab_map(const Vocabulary& kid_vocab, const Vocabulary& slmrd_vocab) {
  VocabMap map;
  map.target.assign(kid_vocab.size(), -1);
  map.target_size = slmrd_vocab.size();
  map.target_vocab_id = slmrd_vocab.fingerprint();
  for (std::size_t k = 0; k < kid_vocab.size(); ++k) {
    const auto& token = kid_vocab.token(k);
    const auto index = slmrd_vocab.index_of(token);
    if (index >= 0) {
      map.target[k] = index;
      ++map.mapped;
    } else {
      map.dropped.push_back(token);
    }
  }
  std::sort(map.dropped.begin(), map.dropped.end());
  return map;
}

LabeledBag remap_bag(const LabeledBag& bag, const VocabMap& map) {
  LabeledBag out;
  out.label = bag.label;
  out.counts.reserve(bag.counts.size());
  for (const auto& [index, count] : bag.counts) {
    if (index >= map.target.size()) {
      throw DataError("KID token index " + std::to_string(index) + " outside the mapped vocabulary");
    }
    const auto target = map.target[index];
    if (target < 0) continue;
    out.counts.emplace_back(static_cast<std::uint32_t>(target), count);
  }
  std::sort(out.counts.begin(), out.counts.end());
  std::size_t w = 0;
  for (std::size_t i = 0; i < out.counts.size(); ++i) {
    if (w > 0 && out.counts[w - 1].first == out.counts[i].first) {
      out.counts[w - 1].second += out.counts[i].second;
    } else {
      out.counts[w++] = out.counts[i];
    }
  }
  out.counts.resize(w);
  return out;
}

EncodedDataset reencode_kid(const Corpus& kid_corpus, const VocabMap& map,
                            const PolarityTable& polarity) {
  if (polarity.size() != map.target_size) {
    throw DataError("polarity table has " + std::to_string(polarity.size()) +
                    " entries but the target vocabulary has " + std::to_string(map.target_size));
  }
  const auto width = static_cast<std::uint32_t>(map.target_size);
  EncodedDataset dataset;
  dataset.width = width;
  dataset.kind = EncodingKind::kPolarityWeighted;
  dataset.vocab_id = map.target_vocab_id;
  dataset.examples.reserve(kid_corpus.size());
  for (const auto& bag : kid_corpus.bags) {
    dataset.examples.push_back(polarity_weighted(remap_bag(bag, map), polarity, width));
  }
  return dataset;
}

TransferReport transfer_evaluate(const Checkpoint& checkpoint, const EncodedDataset& kid_dataset,
                                 const VocabMap& map, unsigned threads) {
  check_compatible(checkpoint, kid_dataset);
  TransferReport report;
  report.evaluation = evaluate(checkpoint.model, kid_dataset, threads);
  report.examples = kid_dataset.size();
  report.empty_examples = static_cast<std::size_t>(
      std::count_if(kid_dataset.examples.begin(), kid_dataset.examples.end(),
                    [](const SparseExample& e) { return e.entries.empty(); }));
  report.mapped_tokens = map.mapped;
  report.dropped = map.dropped;
  report.stats = polarity_stats(kid_dataset);
  return report;
}

TransferReport transfer_evaluate(const std::filesystem::path& checkpoint_path,
                                 const EncodedDataset& kid_dataset, const VocabMap& map,
                                 unsigned threads) {
  return transfer_evaluate(load_checkpoint(checkpoint_path), kid_dataset, map, threads);
}

void write_report(std::ostream& out, const TransferReport& report) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  out << "# KID tokens without an SLMRD counterpart (" << report.dropped.size() << ")\n";
  for (const auto& token : report.dropped) out << token << '\n';
  const auto& c = report.evaluation.confusion;
  out << "# summary\n"
      << "examples=" << report.examples << '\n'
      << "empty_examples=" << report.empty_examples << '\n'
      << "mapped_tokens=" << report.mapped_tokens << '\n'
      << "dropped_tokens=" << report.dropped.size() << '\n'
      << "element_min=" << num(report.stats.element_min) << '\n'
      << "element_max=" << num(report.stats.element_max) << '\n'
      << "rowsum_min=" << num(report.stats.rowsum_min) << '\n'
      << "rowsum_max=" << num(report.stats.rowsum_max) << '\n'
      << "true_positive=" << c.true_positive << '\n'
      << "true_negative=" << c.true_negative << '\n'
      << "false_positive=" << c.false_positive << '\n'
      << "false_negative=" << c.false_negative << '\n'
      << "bce=" << num(report.evaluation.bce) << '\n'
      << "accuracy=" << num(report.evaluation.accuracy) << '\n';
}

void write_report(const std::filesystem::path& path, const TransferReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_report(out, report);
}

}  // namespace bowtie
