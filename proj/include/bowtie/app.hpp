#pragma once

// Command implementations behind the `bowtie` executable. Kept in the
// library so tests can drive them without spawning processes.
//
// A prepared data root has one directory per corpus:
//
//   <root>/slmrd/{vocab.txt, polarity.txt, train.tsv, test.tsv, prepared.json}
//   <root>/kid/{vocab.txt, train.tsv, test.tsv, prepared.json}
//
// where the .tsv files use the canonical corpus line format.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bowtie/corpus.hpp"
#include "bowtie/encode.hpp"
#include "bowtie/net.hpp"
#include "bowtie/train.hpp"
#include "bowtie/transfer.hpp"

namespace bowtie {

enum class DatasetId { kSlmrd, kKid };
std::string_view to_string(DatasetId id);
DatasetId parse_dataset(std::string_view text);

struct PrepareSummary {
  DatasetId dataset = DatasetId::kSlmrd;
  std::size_t vocab_size = 0;
  std::size_t train_size = 0;
  std::size_t train_positive = 0;
  std::size_t test_size = 0;
  std::size_t test_positive = 0;
};

// SLMRD input: imdb.vocab, imdbEr.txt, train/labeledBow.feat, test/labeledBow.feat.
// KID input: imdb_word_index.json and imdb_sequences.tsv (see tools/export_kid.py).
PrepareSummary prepare(DatasetId dataset, const std::filesystem::path& input_dir,
                       const std::filesystem::path& output_dir,
                       int kid_index_offset = kDefaultKidIndexOffset);
void print_summary(std::ostream& out, const PrepareSummary& summary);

struct PreparedCorpus {
  Vocabulary vocab;
  std::optional<PolarityTable> polarity;
  Corpus train;
  Corpus test;
};

PreparedCorpus load_prepared(const std::filesystem::path& data_root, DatasetId dataset);

// Everything needed to reproduce a run.
struct RunConfig {
  std::string command = "train";
  int scenario = 0;  // 1..4 for scenario runs
  std::filesystem::path data_root = "data";
  std::filesystem::path out_dir = "runs";
  DatasetId dataset = DatasetId::kSlmrd;
  EncodingKind encoding = EncodingKind::kMultiHot;
  ModelConfig model;  // input_width is filled from the data
  TrainConfig train;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

struct ScenarioTarget {
  double stop_accuracy;     // early-stop target used by default
  double weakest_reported;  // lowest reference accuracy for the scenario
  double verdict_threshold; // weakest_reported - 0.005
};

// Throws UsageError unless 1 <= scenario <= 4.
ScenarioTarget scenario_target(int scenario);

// Resolved configuration of scenario `n` with library defaults.
RunConfig scenario_config(int scenario, const std::filesystem::path& data_root,
                          const std::filesystem::path& out_dir);

struct RunOutcome {
  RunConfig config;
  std::vector<EpochMetrics> metrics;
  Evaluation validation;
  std::optional<TransferReport> transfer;
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_csv;
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> report;
  std::optional<bool> verdict;
  std::string verdict_line;
};

// Trains on config.dataset/config.encoding, validates on the test split and
// writes checkpoint, metrics CSV and manifest under config.out_dir. Scenario
// runs additionally transfer (scenario 4) and compute a verdict.
RunOutcome run(const RunConfig& config, std::ostream* progress = nullptr);

// Re-runs a manifest and returns the fresh outcome (artifacts go to
// `out_dir` when given, else to the manifest's own directory).
RunOutcome replay(const std::filesystem::path& manifest,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  std::ostream* progress = nullptr);

// Loads the split of a prepared corpus and encodes it the way `checkpoint`
// expects. KID input for an SLMRD checkpoint must go through transfer().
Evaluation evaluate_checkpoint(const std::filesystem::path& checkpoint,
                               const std::filesystem::path& data_root, DatasetId dataset,
                               Split split, unsigned threads = 1);

TransferReport transfer(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& data_root, unsigned threads = 1);

struct StatsResult {
  DatasetId dataset = DatasetId::kSlmrd;
  Split split = Split::kTrain;
  std::size_t examples = 0;
  PolarityStats stats;
};

// Polarity statistics of the polarity-weighted encoding; KID is encoded
// through the SLMRD mapping.
StatsResult polarity_statistics(const std::filesystem::path& data_root, DatasetId dataset,
                                Split split);
void print_stats(std::ostream& out, const StatsResult& result);

}  // namespace bowtie
