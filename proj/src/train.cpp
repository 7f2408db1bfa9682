#include "bowtie/train.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "bowtie/error.hpp"
#include "bowtie/random.hpp"

namespace bowtie {

namespace {

constexpr std::array<char, 8> kMagic{'B', 'O', 'W', 'T', 'I', 'E', 'c', 'k'};
constexpr std::size_t kEvalChunk = 1024;

template <typename UInt>
void put_le(std::string& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename UInt>
UInt get_le(const char* bytes) {
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return value;
}

std::string format_g(double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

}  // namespace

void TrainConfig::validate(std::size_t train_size) const {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (train_size > 0 && batch_size > train_size) {
    throw UsageError("batch size " + std::to_string(batch_size) + " exceeds training set size " +
                     std::to_string(train_size));
  }
  if (target_val_accuracy && !(*target_val_accuracy > 0.0 && *target_val_accuracy <= 1.0)) {
    throw UsageError("target validation accuracy must lie in (0, 1]");
  }
  if (threads == 0) throw UsageError("thread count must be positive");
  optimizer.validate();
}

std::vector<double> predict_all(const BowTieModel& model, const EncodedDataset& dataset,
                                unsigned threads) {
  std::vector<double> probabilities(dataset.size());
  const std::span<const SparseExample> examples(dataset.examples);
  const std::size_t chunks = (dataset.size() + kEvalChunk - 1) / kEvalChunk;
  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kEvalChunk;
    const std::size_t count = std::min(kEvalChunk, dataset.size() - begin);
    const auto cache = forward(model, examples.subspan(begin, count), false);
    const auto p = cache.probabilities();
    std::copy(p.begin(), p.end(), probabilities.begin() + static_cast<std::ptrdiff_t>(begin));
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return probabilities;
  }
  // Each worker writes only its own chunks' slots.
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return probabilities;
}

Evaluation evaluate(const BowTieModel& model, const EncodedDataset& dataset, unsigned threads) {
  if (dataset.empty()) throw DataError("cannot evaluate on an empty dataset");
  if (dataset.width != model.config.input_width) {
    throw DataError("dataset width " + std::to_string(dataset.width) +
                    " does not match model input width " +
                    std::to_string(model.config.input_width));
  }
  const auto probabilities = predict_all(model, dataset, threads);
  Evaluation result;
  double bce_sum = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& example = dataset.examples[i];
    const double p = probabilities[i];
    bce_sum += binary_cross_entropy(p, example.label_value());
    const bool predicted_positive =
        categorize(p, model.config.discriminator) == Label::kPositive;
    const bool positive = example.label == Label::kPositive;
    auto& c = result.confusion;
    if (predicted_positive) {
      ++(positive ? c.true_positive : c.false_positive);
    } else {
      ++(positive ? c.false_negative : c.true_negative);
    }
  }
  const auto n = static_cast<double>(dataset.size());
  result.bce = bce_sum / n;
  result.accuracy =
      static_cast<double>(result.confusion.true_positive + result.confusion.true_negative) / n;
  return result;
}

TrainResult train(BowTieModel model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config) {
  config.validate(train_set.size());
  if (train_set.width != model.config.input_width || val_set.width != model.config.input_width) {
    throw DataError("training/validation width does not match model input width " +
                    std::to_string(model.config.input_width));
  }
  TrainResult result;
  if (config.max_epochs == 0) {
    result.model = std::move(model);
    return result;
  }
  if (train_set.empty()) throw DataError("cannot train on an empty dataset");

  std::vector<SparseExample> order = train_set.examples;
  auto state = init_state(model);
  auto grads = zero_gradients(model);
  std::uint64_t batch_counter = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.data_seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_below(rng, i)]);
    }

    const std::span<const SparseExample> all(order);
    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      const auto slice = all.subspan(begin, std::min(config.batch_size, order.size() - begin));
      try {
        const auto cache =
            forward(model, slice, true, derive_seed(config.dropout_seed, batch_counter++));
        backward(model, slice, cache, grads);
        apply_update(config.optimizer, state, model, grads);
      } catch (const DivergenceError& e) {
        throw DivergenceError("epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(batch) + ": " + e.what());
      }
    }

    const auto on_train = evaluate(model, train_set, config.threads);
    const auto on_val = val_set.empty() ? Evaluation{} : evaluate(model, val_set, config.threads);
    if (!std::isfinite(on_train.bce) || !std::isfinite(on_val.bce)) {
      throw DivergenceError("epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_bce = on_train.bce;
    m.train_accuracy = on_train.accuracy;
    m.val_bce = on_val.bce;
    m.val_accuracy = on_val.accuracy;
    m.epoch_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back(m);

    if (config.progress != nullptr) {
      *config.progress << "epoch=" << epoch << " train_bce=" << format_g(m.train_bce, 6)
                       << " train_acc=" << format_g(m.train_accuracy, 6)
                       << " val_bce=" << format_g(m.val_bce, 6)
                       << " val_acc=" << format_g(m.val_accuracy, 6)
                       << " seconds=" << format_g(m.epoch_seconds, 4) << std::endl;
    }
    if (config.target_val_accuracy && !val_set.empty() &&
        m.val_accuracy >= *config.target_val_accuracy) {
      result.reached_target = true;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

void emit_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics) {
  out << "epoch,train_bce,train_acc,val_bce,val_acc,seconds\n";
  for (const auto& m : metrics) {
    out << m.epoch << ',' << format_g(m.train_bce, 6) << ',' << format_g(m.train_accuracy, 6)
        << ',' << format_g(m.val_bce, 6) << ',' << format_g(m.val_accuracy, 6) << ','
        << format_g(m.epoch_seconds, 6) << '\n';
  }
}

void emit_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  emit_metrics_csv(out, metrics);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_bce,train_acc,val_bce,val_acc,seconds") {
    throw DataError(path.string() + ": unexpected metrics header");
  }
  std::vector<EpochMetrics> metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    std::istringstream row(line);
    char c1, c2, c3, c4, c5;
    row >> m.epoch >> c1 >> m.train_bce >> c2 >> m.train_accuracy >> c3 >> m.val_bce >> c4 >>
        m.val_accuracy >> c5 >> m.epoch_seconds;
    if (!row || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
      throw DataError(path.string() + ": malformed metrics row '" + line + "'");
    }
    metrics.push_back(m);
  }
  return metrics;
}

// --- JSON ------------------------------------------------------------------

nlohmann::json to_json(const ModelConfig& config) {
  return {{"input_width", config.input_width},
          {"hidden_widths", config.hidden_widths},
          {"activation", to_string(config.activation)},
          {"dropout_rate", config.dropout_rate},
          {"l2_weight", config.l2_weight},
          {"discriminator", config.discriminator},
          {"init_seed", config.init_seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig config;
  config.input_width = j.at("input_width").get<std::uint32_t>();
  config.hidden_widths = j.at("hidden_widths").get<std::vector<std::uint32_t>>();
  config.activation = parse_activation(j.at("activation").get<std::string>());
  config.dropout_rate = j.at("dropout_rate").get<double>();
  config.l2_weight = j.at("l2_weight").get<double>();
  config.discriminator = j.at("discriminator").get<double>();
  config.init_seed = j.at("init_seed").get<std::uint64_t>();
  return config;
}

nlohmann::json to_json(const OptimizerSpec& spec) {
  return {{"rule", to_string(spec.rule)},     {"learning_rate", spec.learning_rate},
          {"beta1", spec.beta1},              {"beta2", spec.beta2},
          {"rho_decay", spec.rho_decay},      {"epsilon", spec.epsilon}};
}

OptimizerSpec optimizer_from_json(const nlohmann::json& j) {
  OptimizerSpec spec;
  spec.rule = parse_update_rule(j.at("rule").get<std::string>());
  spec.learning_rate = j.at("learning_rate").get<double>();
  spec.beta1 = j.at("beta1").get<double>();
  spec.beta2 = j.at("beta2").get<double>();
  spec.rho_decay = j.at("rho_decay").get<double>();
  spec.epsilon = j.at("epsilon").get<double>();
  return spec;
}

nlohmann::json to_json(const TrainConfig& config) {
  nlohmann::json j = {{"batch_size", config.batch_size},
                      {"max_epochs", config.max_epochs},
                      {"data_seed", config.data_seed},
                      {"dropout_seed", config.dropout_seed},
                      {"optimizer", to_json(config.optimizer)},
                      {"threads", config.threads}};
  j["target_val_accuracy"] =
      config.target_val_accuracy ? nlohmann::json(*config.target_val_accuracy) : nullptr;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig config;
  config.batch_size = j.at("batch_size").get<std::size_t>();
  config.max_epochs = j.at("max_epochs").get<std::size_t>();
  config.data_seed = j.at("data_seed").get<std::uint64_t>();
  config.dropout_seed = j.at("dropout_seed").get<std::uint64_t>();
  config.optimizer = optimizer_from_json(j.at("optimizer"));
  config.threads = j.value("threads", 1u);
  if (j.contains("target_val_accuracy") && !j["target_val_accuracy"].is_null()) {
    config.target_val_accuracy = j["target_val_accuracy"].get<double>();
  }
  return config;
}

nlohmann::json to_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},         {"train_bce", m.train_bce},
          {"train_acc", m.train_accuracy}, {"val_bce", m.val_bce},
          {"val_acc", m.val_accuracy}, {"seconds", m.epoch_seconds}};
}

// --- checkpoints -----------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  std::string blob;
  blob.reserve(model.parameter_count() * sizeof(double));
  for (const auto& layer : model.layers) {
    for (double w : layer.weights) put_le(blob, std::bit_cast<std::uint64_t>(w));
    for (double b : layer.bias) put_le(blob, std::bit_cast<std::uint64_t>(b));
  }
  nlohmann::json manifest = {
      {"format", "bowtie-checkpoint"},
      {"version", kCheckpointVersion},
      {"model", to_json(model.config)},
      {"vocabulary", checkpoint.vocab_fingerprint},
      {"encoding", to_string(checkpoint.encoding)},
      {"provenance", checkpoint.provenance},
      {"blob_bytes", blob.size()},
      {"blob_fnv1a", fnv1a64(blob)},
  };
  const std::string text = manifest.dump(2) + "\n";

  std::string header(kMagic.begin(), kMagic.end());
  put_le(header, kCheckpointVersion);
  put_le(header, static_cast<std::uint64_t>(text.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << text << blob;
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto name = path.string();
  constexpr std::size_t kHeader = 8 + 4 + 8;
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw DataError(name + ": unrecognized checkpoint format version (bad magic)");
  }
  if (bytes.size() < kHeader) throw DataError(name + ": truncated checkpoint header");
  const auto version = get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    throw DataError(name + ": unsupported checkpoint format version " + std::to_string(version));
  }
  const auto manifest_size = get_le<std::uint64_t>(bytes.data() + 12);
  if (bytes.size() - kHeader < manifest_size) throw DataError(name + ": truncated manifest");

  nlohmann::json manifest;
  Checkpoint checkpoint;
  try {
    manifest = nlohmann::json::parse(bytes.substr(kHeader, manifest_size));
    checkpoint.model.config = model_config_from_json(manifest.at("model"));
    checkpoint.vocab_fingerprint = manifest.at("vocabulary").get<std::string>();
    checkpoint.encoding = parse_encoding(manifest.at("encoding").get<std::string>());
    checkpoint.provenance = manifest.value("provenance", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(name + ": malformed manifest: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(name + ": malformed manifest: " + e.what());
  }
  checkpoint.model.config.validate();

  const std::string_view blob = std::string_view(bytes).substr(kHeader + manifest_size);
  const auto expected = manifest.value("blob_bytes", std::uint64_t{0});
  if (blob.size() < expected) throw DataError(name + ": truncated parameter blob");
  if (blob.size() > expected) throw DataError(name + ": trailing bytes after parameter blob");
  if (fnv1a64(blob) != manifest.value("blob_fnv1a", std::uint64_t{0})) {
    throw DataError(name + ": parameter blob checksum mismatch");
  }

  auto& model = checkpoint.model;
  std::size_t offset = 0;
  auto next = [&]() {
    if (offset + 8 > blob.size()) throw DataError(name + ": parameter blob shorter than model");
    const double v = std::bit_cast<double>(get_le<std::uint64_t>(blob.data() + offset));
    offset += 8;
    return v;
  };
  std::uint32_t inputs = model.config.input_width;
  for (auto outputs : model.config.hidden_widths) {
    DenseLayer layer;
    layer.inputs = inputs;
    layer.outputs = outputs;
    layer.weights.resize(static_cast<std::size_t>(inputs) * outputs);
    layer.bias.resize(outputs);
    for (auto& w : layer.weights) w = next();
    for (auto& b : layer.bias) b = next();
    model.layers.push_back(std::move(layer));
    inputs = outputs;
  }
  if (offset != blob.size()) throw DataError(name + ": parameter blob longer than model");
  return checkpoint;
}

void check_compatible(const Checkpoint& checkpoint, const EncodedDataset& dataset) {
  const auto width = checkpoint.model.config.input_width;
  if (dataset.width != width) {
    throw FingerprintError("vocabulary fingerprint mismatch: checkpoint expects width " +
                           std::to_string(width) + " (" + checkpoint.vocab_fingerprint +
                           ") but dataset has width " + std::to_string(dataset.width));
  }
  if (!dataset.vocab_id.empty() && !checkpoint.vocab_fingerprint.empty() &&
      dataset.vocab_id != checkpoint.vocab_fingerprint) {
    throw FingerprintError("vocabulary fingerprint mismatch: checkpoint " +
                           checkpoint.vocab_fingerprint + " vs dataset " + dataset.vocab_id);
  }
}

}  // namespace bowtie
