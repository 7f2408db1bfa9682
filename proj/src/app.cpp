#include "bowtie/app.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "bowtie/error.hpp"

namespace bowtie {

namespace fs = std::filesystem;

namespace {

fs::path require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DataError("missing input file " + path.string());
  return path;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(require_file(path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

fs::path corpus_dir(const fs::path& root, DatasetId id) {
  return root / std::string(to_string(id));
}

std::string run_name(const RunConfig& config) {
  if (config.scenario > 0) return "scenario" + std::to_string(config.scenario);
  return std::string(config.command) + "-" + std::string(to_string(config.dataset)) + "-" +
         std::string(to_string(config.encoding));
}

EncodedDataset encode_split(const PreparedCorpus& prepared, const Corpus& corpus,
                            EncodingKind kind) {
  if (kind == EncodingKind::kPolarityWeighted && !prepared.polarity) {
    throw DataError("polarity-weighted encoding needs a corpus with polarity ratings (SLMRD)");
  }
  return encode_corpus(corpus, static_cast<std::uint32_t>(prepared.vocab.size()), kind,
                       prepared.polarity ? &*prepared.polarity : nullptr);
}

EncodedDataset encode_kid_for_transfer(const fs::path& data_root, VocabMap* map_out = nullptr) {
  const auto slmrd = load_prepared(data_root, DatasetId::kSlmrd);
  const auto kid = load_prepared(data_root, DatasetId::kKid);
  auto map = build_vocab_map(kid.vocab, slmrd.vocab);
  Corpus all = kid.train;
  all.split = Split::kAll;
  all.bags.insert(all.bags.end(), kid.test.bags.begin(), kid.test.bags.end());
  auto dataset = reencode_kid(all, map, *slmrd.polarity);
  if (map_out != nullptr) *map_out = std::move(map);
  return dataset;
}

}  // namespace

std::string_view to_string(DatasetId id) { return id == DatasetId::kSlmrd ? "slmrd" : "kid"; }

DatasetId parse_dataset(std::string_view text) {
  if (text == "slmrd") return DatasetId::kSlmrd;
  if (text == "kid") return DatasetId::kKid;
  throw UsageError("unknown dataset '" + std::string(text) + "' (expected slmrd or kid)");
}

PrepareSummary prepare(DatasetId dataset, const fs::path& input_dir, const fs::path& output_dir,
                       int kid_index_offset) {
  if (!fs::is_directory(input_dir)) {
    throw DataError("input directory " + input_dir.string() + " does not exist");
  }
  PrepareSummary summary;
  summary.dataset = dataset;
  Vocabulary vocab;
  std::optional<PolarityTable> polarity;
  Corpus train;
  Corpus test;
  if (dataset == DatasetId::kSlmrd) {
    const auto vocab_path = require_file(input_dir / "imdb.vocab");
    const auto polarity_path = require_file(input_dir / "imdbEr.txt");
    const auto train_path = require_file(input_dir / "train" / "labeledBow.feat");
    const auto test_path = require_file(input_dir / "test" / "labeledBow.feat");
    vocab = load_slmrd_vocab(vocab_path);
    polarity = load_polarity(polarity_path, vocab);
    train = load_slmrd_bow(train_path, vocab, Split::kTrain);
    test = load_slmrd_bow(test_path, vocab, Split::kTest);
  } else {
    auto kid = load_kid(require_file(input_dir / "imdb_word_index.json"),
                        require_file(input_dir / "imdb_sequences.tsv"), kid_index_offset);
    vocab = std::move(kid.vocab);
    train = std::move(kid.train);
    test = std::move(kid.test);
  }

  const auto out = corpus_dir(output_dir, dataset);
  fs::create_directories(out);
  write_vocab(out / "vocab.txt", vocab);
  if (polarity) write_polarity(out / "polarity.txt", *polarity);
  write_canonical(out / "train.tsv", train);
  write_canonical(out / "test.tsv", test);

  summary.vocab_size = vocab.size();
  summary.train_size = train.size();
  summary.train_positive = train.positives();
  summary.test_size = test.size();
  summary.test_positive = test.positives();
  write_json(out / "prepared.json",
             {{"dataset", to_string(dataset)},
              {"source", fs::absolute(input_dir).string()},
              {"vocabulary", vocab.fingerprint()},
              {"has_polarity", polarity.has_value()},
              {"kid_index_offset", dataset == DatasetId::kKid ? kid_index_offset : 0},
              {"train", {{"size", summary.train_size}, {"positive", summary.train_positive}}},
              {"test", {{"size", summary.test_size}, {"positive", summary.test_positive}}}});
  return summary;
}

void print_summary(std::ostream& out, const PrepareSummary& s) {
  out << "dataset=" << to_string(s.dataset) << " vocab=" << s.vocab_size
      << " train=" << s.train_size << " train_pos=" << s.train_positive
      << " train_neg=" << s.train_size - s.train_positive << " test=" << s.test_size
      << " test_pos=" << s.test_positive << " test_neg=" << s.test_size - s.test_positive << '\n';
}

PreparedCorpus load_prepared(const fs::path& data_root, DatasetId dataset) {
  const auto dir = corpus_dir(data_root, dataset);
  if (!fs::is_directory(dir)) {
    throw DataError("no prepared " + std::string(to_string(dataset)) + " corpus under " +
                    data_root.string() + " (run `bowtie prepare` first)");
  }
  PreparedCorpus prepared;
  prepared.vocab = load_slmrd_vocab(require_file(dir / "vocab.txt"));
  if (fs::exists(dir / "polarity.txt")) {
    prepared.polarity = load_polarity(dir / "polarity.txt", prepared.vocab);
  }
  prepared.train = read_canonical(require_file(dir / "train.tsv"), prepared.vocab, Split::kTrain);
  prepared.test = read_canonical(require_file(dir / "test.tsv"), prepared.vocab, Split::kTest);
  return prepared;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"scenario", c.scenario},
          {"data_root", c.data_root.string()},
          {"out_dir", c.out_dir.string()},
          {"dataset", to_string(c.dataset)},
          {"encoding", to_string(c.encoding)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.scenario = j.at("scenario").get<int>();
    c.data_root = j.at("data_root").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.dataset = parse_dataset(j.at("dataset").get<std::string>());
    c.encoding = parse_encoding(j.at("encoding").get<std::string>());
    c.model = model_config_from_json(j.at("model"));
    c.train = train_config_from_json(j.at("train"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run manifest: ") + e.what());
  }
}

ScenarioTarget scenario_target(int scenario) {
  // Lowest reference accuracy of each scenario.
  switch (scenario) {
    case 1: return {0.88, 0.8808, 0.8808 - 0.005};
    case 2: return {0.8795, 0.8795, 0.8795 - 0.005};
    case 3: return {0.89, 0.8902, 0.8902 - 0.005};
    case 4: return {0.89, 0.9156, 0.9156 - 0.005};
    default:
      throw UsageError("scenario must be 1, 2, 3 or 4 (got " + std::to_string(scenario) + ")");
  }
}

RunConfig scenario_config(int scenario, const fs::path& data_root, const fs::path& out_dir) {
  const auto target = scenario_target(scenario);
  RunConfig c;
  c.command = "scenario";
  c.scenario = scenario;
  c.data_root = data_root;
  c.out_dir = out_dir;
  c.dataset = scenario == 1 ? DatasetId::kKid : DatasetId::kSlmrd;
  c.encoding = scenario >= 3 ? EncodingKind::kPolarityWeighted : EncodingKind::kMultiHot;
  c.train.target_val_accuracy = target.stop_accuracy;
  return c;
}

RunOutcome run(const RunConfig& input, std::ostream* progress) {
  RunOutcome outcome;
  outcome.config = input;
  auto& config = outcome.config;
  if (config.scenario != 0) scenario_target(config.scenario);

  const auto prepared = load_prepared(config.data_root, config.dataset);
  const auto train_set = encode_split(prepared, prepared.train, config.encoding);
  const auto val_set = encode_split(prepared, prepared.test, config.encoding);

  config.model.input_width = static_cast<std::uint32_t>(prepared.vocab.size());
  auto train_config = config.train;
  train_config.progress = progress;
  auto trained = train(init_model(config.model), train_set, val_set, train_config);
  outcome.metrics = std::move(trained.metrics);
  outcome.validation = evaluate(trained.model, val_set, config.train.threads);

  outcome.run_dir = config.out_dir / run_name(config);
  fs::create_directories(outcome.run_dir);
  outcome.checkpoint = outcome.run_dir / "model.ckpt";
  outcome.metrics_csv = outcome.run_dir / "metrics.csv";
  outcome.manifest = outcome.run_dir / "manifest.json";

  Checkpoint checkpoint;
  checkpoint.model = trained.model;
  checkpoint.vocab_fingerprint = prepared.vocab.fingerprint();
  checkpoint.encoding = config.encoding;
  checkpoint.provenance = {{"dataset", to_string(config.dataset)},
                           {"optimizer", to_json(config.train.optimizer)},
                           {"data_seed", config.train.data_seed},
                           {"dropout_seed", config.train.dropout_seed},
                           {"epochs_run", outcome.metrics.size()},
                           {"reached_target", trained.reached_target}};
  save_checkpoint(outcome.checkpoint, checkpoint);
  emit_metrics_csv(outcome.metrics_csv, outcome.metrics);

  if (config.scenario == 4) {
    VocabMap map;
    const auto kid = encode_kid_for_transfer(config.data_root, &map);
    outcome.transfer = transfer_evaluate(checkpoint, kid, map, config.train.threads);
    outcome.report = outcome.run_dir / "transfer_report.txt";
    write_report(*outcome.report, *outcome.transfer);
  }

  nlohmann::json results = {{"epochs_run", outcome.metrics.size()},
                            {"reached_target", trained.reached_target},
                            {"val_accuracy", outcome.validation.accuracy},
                            {"val_bce", outcome.validation.bce}};
  if (config.scenario != 0) {
    const auto target = scenario_target(config.scenario);
    const double achieved =
        outcome.transfer ? outcome.transfer->evaluation.accuracy : outcome.validation.accuracy;
    outcome.verdict = achieved >= target.verdict_threshold;
    outcome.verdict_line = std::string("verdict scenario=") + std::to_string(config.scenario) +
                           (*outcome.verdict ? " PASS " : " FAIL ") +
                           (outcome.transfer ? "transfer_accuracy=" : "val_accuracy=") +
                           percent(achieved) + " threshold=" + percent(target.verdict_threshold) +
                           " (weakest reference " + percent(target.weakest_reported) +
                           " minus 0.5-point stochastic allowance)";
    results["verdict"] = *outcome.verdict;
    results["verdict_line"] = outcome.verdict_line;
    std::ofstream(outcome.run_dir / "verdict.txt") << outcome.verdict_line << '\n';
  }
  if (outcome.transfer) {
    results["transfer_accuracy"] = outcome.transfer->evaluation.accuracy;
    results["transfer_bce"] = outcome.transfer->evaluation.bce;
  }

  nlohmann::json artifacts = {{"checkpoint", outcome.checkpoint.string()},
                              {"metrics", outcome.metrics_csv.string()}};
  if (outcome.report) artifacts["report"] = outcome.report->string();
  nlohmann::json metrics_json = nlohmann::json::array();
  for (const auto& m : outcome.metrics) metrics_json.push_back(to_json(m));
  write_json(outcome.manifest, {{"config", to_json(config)},
                                {"artifacts", artifacts},
                                {"results", results},
                                {"metrics", metrics_json}});
  return outcome;
}

RunOutcome replay(const fs::path& manifest, const std::optional<fs::path>& out_dir,
                  std::ostream* progress) {
  auto config = run_config_from_json(read_json(manifest).at("config"));
  if (out_dir) config.out_dir = *out_dir;
  return run(config, progress);
}

Evaluation evaluate_checkpoint(const fs::path& checkpoint_path, const fs::path& data_root,
                               DatasetId dataset, Split split, unsigned threads) {
  const auto checkpoint = load_checkpoint(checkpoint_path);
  const auto prepared = load_prepared(data_root, dataset);
  if (prepared.vocab.fingerprint() != checkpoint.vocab_fingerprint) {
    throw FingerprintError("vocabulary fingerprint mismatch: checkpoint " +
                           checkpoint.vocab_fingerprint + " vs " + std::string(to_string(dataset)) +
                           " " + prepared.vocab.fingerprint() +
                           (dataset == DatasetId::kKid ? " (use `bowtie transfer` for KID)" : ""));
  }
  Corpus corpus;
  if (split == Split::kTrain) {
    corpus = prepared.train;
  } else if (split == Split::kTest) {
    corpus = prepared.test;
  } else {
    corpus = prepared.train;
    corpus.bags.insert(corpus.bags.end(), prepared.test.bags.begin(), prepared.test.bags.end());
  }
  const auto data = encode_split(prepared, corpus, checkpoint.encoding);
  check_compatible(checkpoint, data);
  return evaluate(checkpoint.model, data, threads);
}

TransferReport transfer(const fs::path& checkpoint_path, const fs::path& data_root,
                        unsigned threads) {
  const auto checkpoint = load_checkpoint(checkpoint_path);
  VocabMap map;
  const auto kid = encode_kid_for_transfer(data_root, &map);
  return transfer_evaluate(checkpoint, kid, map, threads);
}

StatsResult polarity_statistics(const fs::path& data_root, DatasetId dataset, Split split) {
  StatsResult result;
  result.dataset = dataset;
  result.split = split;
  EncodedDataset data;
  if (dataset == DatasetId::kKid) {
    data = encode_kid_for_transfer(data_root);
    if (split != Split::kAll) {
      // Train reviews come first in the transfer encoding.
      const auto kid = load_prepared(data_root, DatasetId::kKid);
      const auto train_size = static_cast<std::ptrdiff_t>(kid.train.size());
      auto& ex = data.examples;
      if (split == Split::kTrain) {
        ex.erase(ex.begin() + train_size, ex.end());
      } else {
        ex.erase(ex.begin(), ex.begin() + train_size);
      }
    }
  } else {
    const auto prepared = load_prepared(data_root, dataset);
    Corpus corpus = split == Split::kTest ? prepared.test : prepared.train;
    if (split == Split::kAll) {
      corpus.bags.insert(corpus.bags.end(), prepared.test.bags.begin(), prepared.test.bags.end());
    }
    data = encode_split(prepared, corpus, EncodingKind::kPolarityWeighted);
  }
  result.examples = data.size();
  result.stats = polarity_stats(data);
  return result;
}

void print_stats(std::ostream& out, const StatsResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "dataset=%s split=%s examples=%zu element_min=%.6f element_max=%.6f "
                "rowsum_min=%.6f rowsum_max=%.6f\n",
                std::string(to_string(r.dataset)).c_str(), std::string(to_string(r.split)).c_str(),
                r.examples, r.stats.element_min, r.stats.element_max, r.stats.rowsum_min,
                r.stats.rowsum_max);
  out << buf;
}

}  // namespace bowtie
