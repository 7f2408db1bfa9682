#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bowtie/encode.hpp"
#include "bowtie/net.hpp"
#include "bowtie/optim.hpp"

namespace bowtie {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t max_epochs = 20;
  std::optional<double> target_val_accuracy;
  std::uint64_t data_seed = 0;
  std::uint64_t dropout_seed = 0;
  OptimizerSpec optimizer;
  unsigned threads = 1;                  // evaluation fan-out only
  std::ostream* progress = nullptr;      // one `epoch=` line per epoch when set

  void validate(std::size_t train_size) const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_bce = 0.0;
  double train_accuracy = 0.0;
  double val_bce = 0.0;
  double val_accuracy = 0.0;
  double epoch_seconds = 0.0;
};

struct TrainResult {
  BowTieModel model;
  std::vector<EpochMetrics> metrics;
  bool reached_target = false;
};

TrainResult train(BowTieModel model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config);

struct Confusion {
  std::size_t true_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  std::size_t total() const {
    return true_positive + true_negative + false_positive + false_negative;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Evaluation {
  double accuracy = 0.0;
  double bce = 0.0;  // mean binary cross-entropy, no L2 term
  Confusion confusion;
};

// Inference-mode scoring. Per-example results are reduced in dataset order,
// so the result does not depend on `threads`.
Evaluation evaluate(const BowTieModel& model, const EncodedDataset& dataset,
                    unsigned threads = 1);

// Per-example probabilities in dataset order.
std::vector<double> predict_all(const BowTieModel& model, const EncodedDataset& dataset,
                                unsigned threads = 1);

void emit_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics);
void emit_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

// --- checkpoints -----------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  BowTieModel model;
  std::string vocab_fingerprint;
  EncodingKind encoding = EncodingKind::kMultiHot;
  nlohmann::json provenance = nlohmann::json::object();
};

// Layout: 8-byte magic "BOWTIEck", u32 LE version, u64 LE manifest length,
// JSON manifest, then every weight and bias as little-endian IEEE doubles.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws FingerprintError when `dataset` was not built on the checkpoint's
// vocabulary (width or vocabulary fingerprint differ).
void check_compatible(const Checkpoint& checkpoint, const EncodedDataset& dataset);

// --- JSON forms of configuration ---------------------------------------------

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerSpec& spec);
OptimizerSpec optimizer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EpochMetrics& metrics);

}  // namespace bowtie
