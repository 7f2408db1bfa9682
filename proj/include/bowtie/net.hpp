#pragma once

// The BowTie network: sparse input -> cascade of dense layers -> dropout on
// the last hidden layer -> width-1 logit -> sigmoid -> discriminator.
//
// Loss is mean binary cross-entropy plus lambda * sum ||W_l||_F^2 (biases are
// not penalized). All parameters and activations are doubles.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bowtie/encode.hpp"

namespace bowtie {

enum class Activation { kNone, kRectifier };
std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

struct ModelConfig {
  std::uint32_t input_width = 0;
  std::vector<std::uint32_t> hidden_widths{16, 8, 1};  // last entry must be 1
  Activation activation = Activation::kNone;
  double dropout_rate = 0.2;
  double l2_weight = 0.019;
  double discriminator = 0.5;
  std::uint64_t init_seed = 0;

  // Throws UsageError when a field is out of its domain.
  void validate() const;
};

// Row-major weights: weight(i, j) connects input i to output j.
struct DenseLayer {
  std::uint32_t inputs = 0;
  std::uint32_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& weight(std::size_t i, std::size_t j) { return weights[i * outputs + j]; }
  double weight(std::size_t i, std::size_t j) const { return weights[i * outputs + j]; }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct BowTieModel {
  ModelConfig config;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  // Index of the layer whose output is masked by dropout, if any.
  std::optional<std::size_t> dropout_layer() const;
};

inline constexpr double kProbabilityClamp = 1e-12;

BowTieModel init_model(const ModelConfig& config);

// Per-layer intermediates for one batch. pre/post are batch x outputs,
// row-major. For the final layer pre holds the logit and post holds p.
struct ForwardCache {
  std::size_t batch_size = 0;
  bool training = false;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<double> dropout_mask;  // batch x width of the dropout layer; empty if unused

  std::span<const double> probabilities() const { return post.back(); }
  friend bool operator==(const ForwardCache&, const ForwardCache&) = default;
};

ForwardCache forward(const BowTieModel& model, std::span<const SparseExample> batch,
                     bool training, std::uint64_t dropout_seed = 0);

struct LossValue {
  double bce = 0.0;
  double total = 0.0;
};

double clamp_probability(double p);
double binary_cross_entropy(double p, double label);
double l2_penalty(const BowTieModel& model);

// Labels must be 0 or 1.
LossValue loss(const ForwardCache& cache, std::span<const double> labels,
               const BowTieModel& model);
std::vector<double> labels_of(std::span<const SparseExample> batch);

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
};

Gradients zero_gradients(const BowTieModel& model);

// Gradient of the total loss. Reuses the dropout mask stored in `cache`.
void backward(const BowTieModel& model, std::span<const SparseExample> batch,
              const ForwardCache& cache, Gradients& grads);
Gradients backward(const BowTieModel& model, std::span<const SparseExample> batch,
                   const ForwardCache& cache);

struct Prediction {
  double probability = 0.5;
  Label category = Label::kPositive;
};

Prediction predict(const BowTieModel& model, const SparseExample& example);
Label categorize(double probability, double discriminator);

struct ParameterCoordinate {
  std::size_t layer = 0;
  bool bias = false;
  std::size_t index = 0;  // flat index into weights or bias
};

double& parameter(BowTieModel& model, const ParameterCoordinate& coord);

// (f(x + h) - f(x - h)) / 2h. Throws UsageError unless h > 0.
double central_difference(const std::function<double(double)>& f, double x, double h);

// Central difference of the total loss. When `dropout_seed` is set the
// training-mode forward pass is used with that (frozen) mask, otherwise
// inference mode.
double finite_difference_grad(const BowTieModel& model, std::span<const SparseExample> batch,
                              const ParameterCoordinate& coord, double h,
                              std::optional<std::uint64_t> dropout_seed = std::nullopt);

}  // namespace bowtie
