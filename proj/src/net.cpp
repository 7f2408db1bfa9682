#include "bowtie/net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bowtie/error.hpp"
#include "bowtie/random.hpp"

namespace bowtie {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch(const BowTieModel& model, std::span<const SparseExample> batch) {
  for (const auto& example : batch) {
    if (example.width != model.config.input_width) {
      throw DataError("example width " + std::to_string(example.width) +
                      " does not match model input width " +
                      std::to_string(model.config.input_width));
    }
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::kNone ? "none" : "relu";
}

Activation parse_activation(std::string_view text) {
  if (text == "none" || text == "linear") return Activation::kNone;
  if (text == "relu" || text == "rectifier") return Activation::kRectifier;
  throw UsageError("unknown activation '" + std::string(text) + "' (expected none or relu)");
}

void ModelConfig::validate() const {
  if (input_width == 0) throw UsageError("input width must be positive");
  if (hidden_widths.empty() || hidden_widths.back() != 1) {
    throw UsageError("layer widths must end with a width-1 output layer");
  }
  for (auto w : hidden_widths) {
    if (w == 0) throw UsageError("layer widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw UsageError("dropout rate must lie in [0, 1)");
  }
  if (!(l2_weight >= 0.0) || !std::isfinite(l2_weight)) {
    throw UsageError("L2 weight must be finite and nonnegative");
  }
  if (!(discriminator >= 0.0 && discriminator <= 1.0)) {
    throw UsageError("discriminator must lie in [0, 1]");
  }
}

std::size_t BowTieModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::optional<std::size_t> BowTieModel::dropout_layer() const {
  if (layers.size() < 2) return std::nullopt;
  return layers.size() - 2;
}

BowTieModel init_model(const ModelConfig& config) {
  config.validate();
  BowTieModel model;
  model.config = config;
  Rng rng(config.init_seed);
  std::uint32_t inputs = config.input_width;
  for (auto outputs : config.hidden_widths) {
    DenseLayer layer;
    layer.inputs = inputs;
    layer.outputs = outputs;
    layer.weights.resize(static_cast<std::size_t>(inputs) * outputs);
    layer.bias.assign(outputs, 0.0);
    const double bound = std::sqrt(6.0 / (static_cast<double>(inputs) + outputs));
    for (auto& w : layer.weights) w = bound * (2.0 * uniform01(rng) - 1.0);
    model.layers.push_back(std::move(layer));
    inputs = outputs;
  }
  return model;
}

ForwardCache forward(const BowTieModel& model, std::span<const SparseExample> batch,
                     bool training, std::uint64_t dropout_seed) {
  check_batch(model, batch);
  const auto& config = model.config;
  const std::size_t n = batch.size();
  const std::size_t depth = model.layers.size();
  const auto dropout_at = model.dropout_layer();
  const bool use_dropout = training && dropout_at && config.dropout_rate > 0.0;

  ForwardCache cache;
  cache.batch_size = n;
  cache.training = training;
  cache.pre.resize(depth);
  cache.post.resize(depth);

  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = model.layers[l];
    const std::size_t out = layer.outputs;
    auto& z = cache.pre[l];
    z.resize(n * out);
    for (std::size_t i = 0; i < n; ++i) {
      double* zi = z.data() + i * out;
      std::copy(layer.bias.begin(), layer.bias.end(), zi);
      if (l == 0) {
        // Sparse gather: only rows of W for nonzero input columns.
        for (const auto& [column, value] : batch[i].entries) {
          const double* row = layer.weights.data() + static_cast<std::size_t>(column) * out;
          for (std::size_t j = 0; j < out; ++j) zi[j] += value * row[j];
        }
      } else {
        const double* a = cache.post[l - 1].data() + i * layer.inputs;
        for (std::size_t k = 0; k < layer.inputs; ++k) {
          const double ak = a[k];
          if (ak == 0.0) continue;
          const double* row = layer.weights.data() + k * out;
          for (std::size_t j = 0; j < out; ++j) zi[j] += ak * row[j];
        }
      }
    }

    auto& a = cache.post[l];
    if (l + 1 == depth) {
      a.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(z[i])) {
          throw DivergenceError("non-finite logit for batch example " + std::to_string(i));
        }
        a[i] = sigmoid(z[i]);
      }
      break;
    }

    a = z;
    if (config.activation == Activation::kRectifier) {
      for (auto& v : a) v = std::max(v, 0.0);
    }
    if (use_dropout && l == *dropout_at) {
      Rng rng(dropout_seed);
      const double keep = 1.0 - config.dropout_rate;
      const double scale = 1.0 / keep;
      cache.dropout_mask.resize(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        cache.dropout_mask[k] = uniform01(rng) < keep ? scale : 0.0;
        a[k] *= cache.dropout_mask[k];
      }
    }
  }
  return cache;
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double binary_cross_entropy(double p, double label) {
  const double q = clamp_probability(p);
  return -(label * std::log(q) + (1.0 - label) * std::log(1.0 - q));
}

double l2_penalty(const BowTieModel& model) {
  double sum = 0.0;
  for (const auto& layer : model.layers) {
    for (double w : layer.weights) sum += w * w;
  }
  return model.config.l2_weight * sum;
}

LossValue loss(const ForwardCache& cache, std::span<const double> labels,
               const BowTieModel& model) {
  if (labels.size() != cache.batch_size) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match batch size " +
                    std::to_string(cache.batch_size));
  }
  const auto p = cache.probabilities();
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw DataError("label " + std::to_string(labels[i]) + " is not binary");
    }
    sum += binary_cross_entropy(p[i], labels[i]);
  }
  LossValue value;
  value.bce = labels.empty() ? 0.0 : sum / static_cast<double>(labels.size());
  value.total = value.bce + l2_penalty(model);
  return value;
}

std::vector<double> labels_of(std::span<const SparseExample> batch) {
  std::vector<double> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = batch[i].label_value();
  return labels;
}

Gradients zero_gradients(const BowTieModel& model) {
  Gradients grads;
  grads.layers.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    grads.layers[l].weights.assign(model.layers[l].weights.size(), 0.0);
    grads.layers[l].bias.assign(model.layers[l].bias.size(), 0.0);
  }
  return grads;
}

void backward(const BowTieModel& model, std::span<const SparseExample> batch,
              const ForwardCache& cache, Gradients& grads) {
  const std::size_t depth = model.layers.size();
  const std::size_t n = batch.size();
  if (cache.batch_size != n || cache.pre.size() != depth || cache.post.size() != depth) {
    throw DataError("forward cache does not match this model and batch");
  }
  for (std::size_t l = 0; l < depth; ++l) {
    if (cache.pre[l].size() != n * model.layers[l].outputs) {
      throw DataError("forward cache layer " + std::to_string(l) + " has a stale shape");
    }
  }
  if (grads.layers.size() != depth) grads = zero_gradients(model);

  const double two_lambda = 2.0 * model.config.l2_weight;
  const auto dropout_at = model.dropout_layer();
  const auto p = cache.probabilities();

  // delta holds dLoss/dz for the current layer, batch x outputs.
  std::vector<double> delta(n);
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) delta[i] = (p[i] - batch[i].label_value()) * inv_n;

  std::vector<double> upstream;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = model.layers[l];
    auto& g = grads.layers[l];
    const std::size_t out = layer.outputs;
    const std::size_t in = layer.inputs;

    g.weights.resize(layer.weights.size());
    g.bias.assign(out, 0.0);
    for (std::size_t k = 0; k < layer.weights.size(); ++k) g.weights[k] = two_lambda * layer.weights[k];

    for (std::size_t i = 0; i < n; ++i) {
      const double* di = delta.data() + i * out;
      for (std::size_t j = 0; j < out; ++j) g.bias[j] += di[j];
      if (l == 0) {
        for (const auto& [column, value] : batch[i].entries) {
          double* row = g.weights.data() + static_cast<std::size_t>(column) * out;
          for (std::size_t j = 0; j < out; ++j) row[j] += value * di[j];
        }
      } else {
        const double* a = cache.post[l - 1].data() + i * in;
        for (std::size_t k = 0; k < in; ++k) {
          if (a[k] == 0.0) continue;
          double* row = g.weights.data() + k * out;
          for (std::size_t j = 0; j < out; ++j) row[j] += a[k] * di[j];
        }
      }
    }
    if (l == 0) break;

    // Propagate to the previous layer's pre-activation.
    upstream.assign(n * in, 0.0);
    const bool masked = dropout_at && *dropout_at == l - 1 && !cache.dropout_mask.empty();
    const auto& z_prev = cache.pre[l - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const double* di = delta.data() + i * out;
      double* ui = upstream.data() + i * in;
      for (std::size_t k = 0; k < in; ++k) {
        const double* row = layer.weights.data() + k * out;
        double s = 0.0;
        for (std::size_t j = 0; j < out; ++j) s += row[j] * di[j];
        if (masked) s *= cache.dropout_mask[i * in + k];
        if (model.config.activation == Activation::kRectifier && !(z_prev[i * in + k] > 0.0)) s = 0.0;
        ui[k] = s;
      }
    }
    delta.swap(upstream);
  }
}

Gradients backward(const BowTieModel& model, std::span<const SparseExample> batch,
                   const ForwardCache& cache) {
  Gradients grads = zero_gradients(model);
  backward(model, batch, cache, grads);
  return grads;
}

Label categorize(double probability, double discriminator) {
  return probability >= discriminator ? Label::kPositive : Label::kNegative;
}

Prediction predict(const BowTieModel& model, const SparseExample& example) {
  const auto cache = forward(model, std::span(&example, 1), false);
  const double p = cache.probabilities()[0];
  return {p, categorize(p, model.config.discriminator)};
}

double& parameter(BowTieModel& model, const ParameterCoordinate& coord) {
  auto& layer = model.layers.at(coord.layer);
  return coord.bias ? layer.bias.at(coord.index) : layer.weights.at(coord.index);
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  if (!(h > 0.0)) throw UsageError("finite-difference step must be positive");
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double finite_difference_grad(const BowTieModel& model, std::span<const SparseExample> batch,
                              const ParameterCoordinate& coord, double h,
                              std::optional<std::uint64_t> dropout_seed) {
  BowTieModel probe = model;
  const auto labels = labels_of(batch);
  const double origin = parameter(probe, coord);
  auto total_at = [&](double value) {
    parameter(probe, coord) = value;
    const auto cache = forward(probe, batch, dropout_seed.has_value(), dropout_seed.value_or(0));
    return loss(cache, labels, probe).total;
  };
  return central_difference(total_at, origin, h);
}

}  // namespace bowtie
