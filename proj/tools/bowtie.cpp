// bowtie: prepare the IMDB corpora, train/evaluate BowTie models and run the
// four train/validate/transfer scenarios.
//
// Every option can also be set through an environment variable named
// BOWTIE_<OPTION> (upper case, dashes as underscores), e.g. BOWTIE_DATA.

#include <CLI11.hpp>

#include <cctype>
#include <fstream>
#include <iostream>
#include <string>

#include "bowtie/app.hpp"
#include "bowtie/error.hpp"
#include "bowtie/random.hpp"

namespace {

using namespace bowtie;

std::string env_name(std::string flag) {
  std::string name = "BOWTIE_";
  for (char c : flag) name.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  return name;
}

struct HyperFlags {
  std::string hidden = "16,8,1";
  std::string activation = "none";
  double dropout = 0.2;
  double l2 = 0.019;
  double delta = 0.5;
  std::string optimizer = "nadam";
  double learning_rate = 0.001;
  std::size_t batch_size = 512;
  std::size_t epochs = 20;
  double target_acc = -1.0;  // < 0: keep the command's default, 0: disable
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& f) {
  auto opt = [&](const std::string& name, auto& value, const std::string& help) {
    return cmd->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
  };
  opt("hidden", f.hidden, "comma-separated layer widths, last must be 1");
  opt("activation", f.activation, "dense layer activation: none | relu");
  opt("dropout", f.dropout, "dropout rate on the last hidden layer");
  opt("l2", f.l2, "L2 regularization weight");
  opt("delta", f.delta, "discriminator threshold");
  opt("optimizer", f.optimizer, "sgd | adam | nadam | rmsprop");
  opt("learning-rate", f.learning_rate, "optimizer step size");
  opt("batch-size", f.batch_size, "mini-batch size");
  opt("epochs", f.epochs, "maximum number of epochs");
  opt("target-acc", f.target_acc,
      "stop at the first epoch whose validation accuracy reaches this value (0 disables)");
  opt("seed", f.seed, "seed for initialization, shuffling and dropout");
  opt("threads", f.threads, "evaluation threads (1 = fully deterministic)");
}

std::vector<std::uint32_t> parse_widths(const std::string& text) {
  std::vector<std::uint32_t> widths;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto field = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      const auto value = std::stoul(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
      widths.push_back(static_cast<std::uint32_t>(value));
    } catch (const std::exception&) {
      throw UsageError("invalid layer width '" + field + "' in --hidden");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return widths;
}

void apply_flags(const HyperFlags& f, RunConfig& c) {
  c.model.hidden_widths = parse_widths(f.hidden);
  c.model.activation = parse_activation(f.activation);
  c.model.dropout_rate = f.dropout;
  c.model.l2_weight = f.l2;
  c.model.discriminator = f.delta;
  c.model.init_seed = derive_seed(f.seed, 1);
  c.train.optimizer.rule = parse_update_rule(f.optimizer);
  c.train.optimizer.learning_rate = f.learning_rate;
  c.train.batch_size = f.batch_size;
  c.train.max_epochs = f.epochs;
  c.train.data_seed = derive_seed(f.seed, 2);
  c.train.dropout_seed = derive_seed(f.seed, 3);
  c.train.threads = f.threads;
  if (f.target_acc == 0.0) {
    c.train.target_val_accuracy.reset();
  } else if (f.target_acc > 0.0) {
    c.train.target_val_accuracy = f.target_acc;
  }
  auto shape = c.model;
  shape.input_width = 1;  // filled from the data later
  shape.validate();
  c.train.optimizer.validate();
}

void print_outcome(const RunOutcome& o) {
  std::cout << "run_dir=" << o.run_dir.string() << " epochs=" << o.metrics.size()
            << " val_accuracy=" << o.validation.accuracy << " val_bce=" << o.validation.bce;
  if (o.transfer) {
    std::cout << " transfer_accuracy=" << o.transfer->evaluation.accuracy
              << " transfer_bce=" << o.transfer->evaluation.bce
              << " dropped_tokens=" << o.transfer->dropped.size();
  }
  std::cout << '\n';
  if (!o.verdict_line.empty()) std::cout << o.verdict_line << '\n';
}

int fail(const char* kind, int code, const std::string& message) {
  std::string flat = message;
  for (auto& c : flat) {
    if (c == '\n') c = ' ';
  }
  std::cerr << "bowtie: error kind=" << kind << " code=" << code << " message=" << flat << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BowTie sentiment classifier: corpora, training, scenarios, transfer"};
  app.require_subcommand(1);

  std::string data_root = "data";
  std::string out_dir = "runs";
  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_root, "prepared data root")
        ->envname("BOWTIE_DATA")
        ->capture_default_str();
  };
  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory for run artifacts")
        ->envname("BOWTIE_OUT")
        ->capture_default_str();
  };

  // prepare
  auto* prepare_cmd = app.add_subcommand("prepare", "convert a raw corpus into the canonical format");
  std::string prepare_dataset;
  std::string input_dir;
  int kid_offset = kDefaultKidIndexOffset;
  prepare_cmd->add_option("dataset", prepare_dataset, "slmrd | kid")->required();
  prepare_cmd->add_option("--input", input_dir, "raw corpus directory")
      ->envname("BOWTIE_INPUT")
      ->required();
  prepare_cmd->add_option("--kid-index-offset", kid_offset,
                          "KID sequence values below this are control symbols")
      ->envname("BOWTIE_KID_INDEX_OFFSET")
      ->capture_default_str();
  add_data(prepare_cmd);

  // scenario
  auto* scenario_cmd = app.add_subcommand("scenario", "run scenario 1-4");
  int scenario = 0;
  HyperFlags scenario_flags;
  scenario_cmd->add_option("n", scenario, "scenario number 1..4")->required();
  add_data(scenario_cmd);
  add_out(scenario_cmd);
  add_hyper_flags(scenario_cmd, scenario_flags);

  // train
  auto* train_cmd = app.add_subcommand("train", "train and validate a model");
  HyperFlags train_flags;
  std::string train_dataset = "slmrd";
  std::string train_encoding = "multi-hot";
  train_cmd->add_option("--dataset", train_dataset, "slmrd | kid")
      ->envname("BOWTIE_DATASET")
      ->capture_default_str();
  train_cmd->add_option("--encoding", train_encoding, "multi-hot | polarity-weighted")
      ->envname("BOWTIE_ENCODING")
      ->capture_default_str();
  add_data(train_cmd);
  add_out(train_cmd);
  add_hyper_flags(train_cmd, train_flags);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a prepared split");
  std::string checkpoint;
  std::string eval_dataset = "slmrd";
  std::string eval_split = "test";
  unsigned eval_threads = 1;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->envname("BOWTIE_CHECKPOINT")
      ->required();
  eval_cmd->add_option("--dataset", eval_dataset, "slmrd | kid")->capture_default_str();
  eval_cmd->add_option("--split", eval_split, "train | test | all")->capture_default_str();
  eval_cmd->add_option("--threads", eval_threads)->envname("BOWTIE_THREADS");
  add_data(eval_cmd);

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "score an SLMRD checkpoint on all KID reviews");
  std::string report_path;
  unsigned transfer_threads = 1;
  transfer_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->envname("BOWTIE_CHECKPOINT")
      ->required();
  transfer_cmd->add_option("--report", report_path, "write the transfer report here")
      ->envname("BOWTIE_REPORT");
  transfer_cmd->add_option("--threads", transfer_threads)->envname("BOWTIE_THREADS");
  add_data(transfer_cmd);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "polarity ranges of the polarity-weighted encoding");
  std::string stats_dataset = "slmrd";
  std::string stats_split = "train";
  stats_cmd->add_option("--dataset", stats_dataset, "slmrd | kid")->capture_default_str();
  stats_cmd->add_option("--split", stats_split, "train | test | all")->capture_default_str();
  add_data(stats_cmd);

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare metrics");
  std::string manifest;
  std::string replay_out;
  replay_cmd->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  replay_cmd->add_option("--out", replay_out, "output directory (default: alongside the manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", static_cast<int>(ExitCode::kUsage), e.what());
  }

  try {
    if (*prepare_cmd) {
      const auto summary = prepare(parse_dataset(prepare_dataset), input_dir, data_root, kid_offset);
      print_summary(std::cout, summary);
    } else if (*scenario_cmd) {
      auto config = scenario_config(scenario, data_root, out_dir);
      const auto stop = config.train.target_val_accuracy;
      apply_flags(scenario_flags, config);
      if (scenario_flags.target_acc < 0.0) config.train.target_val_accuracy = stop;
      const auto outcome = run(config, &std::cerr);
      print_outcome(outcome);
      if (outcome.verdict && !*outcome.verdict) return static_cast<int>(ExitCode::kVerdict);
    } else if (*train_cmd) {
      RunConfig config;
      config.command = "train";
      config.data_root = data_root;
      config.out_dir = out_dir;
      config.dataset = parse_dataset(train_dataset);
      config.encoding = parse_encoding(train_encoding);
      apply_flags(train_flags, config);
      print_outcome(run(config, &std::cerr));
    } else if (*eval_cmd) {
      const auto result = evaluate_checkpoint(checkpoint, data_root, parse_dataset(eval_dataset),
                                              parse_split(eval_split), eval_threads);
      const auto& c = result.confusion;
      std::cout << "accuracy=" << result.accuracy << " bce=" << result.bce
                << " tp=" << c.true_positive << " tn=" << c.true_negative
                << " fp=" << c.false_positive << " fn=" << c.false_negative << '\n';
    } else if (*transfer_cmd) {
      const auto report = transfer(checkpoint, data_root, transfer_threads);
      if (!report_path.empty()) write_report(report_path, report);
      std::cout << "transfer_accuracy=" << report.evaluation.accuracy
                << " bce=" << report.evaluation.bce << " examples=" << report.examples
                << " dropped_tokens=" << report.dropped.size()
                << " element_max=" << report.stats.element_max << '\n';
    } else if (*stats_cmd) {
      print_stats(std::cout,
                  polarity_statistics(data_root, parse_dataset(stats_dataset), parse_split(stats_split)));
    } else if (*replay_cmd) {
      std::optional<std::filesystem::path> out;
      if (!replay_out.empty()) out = replay_out;
      const auto original = nlohmann::json::parse(std::ifstream(manifest));
      const auto outcome = replay(manifest, out, &std::cerr);
      print_outcome(outcome);
      bool same = original.at("metrics").size() == outcome.metrics.size();
      for (std::size_t i = 0; same && i < outcome.metrics.size(); ++i) {
        const auto& m = original["metrics"][i];
        const auto& r = outcome.metrics[i];
        same = m.at("train_bce").get<double>() == r.train_bce &&
               m.at("train_acc").get<double>() == r.train_accuracy &&
               m.at("val_bce").get<double>() == r.val_bce &&
               m.at("val_acc").get<double>() == r.val_accuracy;
      }
      std::cout << "replay_identical=" << (same ? "true" : "false") << '\n';
      if (!same) return static_cast<int>(ExitCode::kVerdict);
    }
  } catch (const Error& e) {
    return fail(e.kind(), static_cast<int>(e.exit_code()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", static_cast<int>(ExitCode::kData), e.what());
  }
  return 0;
}
