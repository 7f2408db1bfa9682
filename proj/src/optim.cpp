#include "bowtie/optim.hpp"

#include <cmath>
#include <string>

#include "bowtie/error.hpp"

namespace bowtie {

std::string_view to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kSgd: return "sgd";
    case UpdateRule::kAdam: return "adam";
    case UpdateRule::kNadam: return "nadam";
    case UpdateRule::kRmsprop: return "rmsprop";
  }
  return "sgd";
}

UpdateRule parse_update_rule(std::string_view text) {
  if (text == "sgd") return UpdateRule::kSgd;
  if (text == "adam") return UpdateRule::kAdam;
  if (text == "nadam") return UpdateRule::kNadam;
  if (text == "rmsprop") return UpdateRule::kRmsprop;
  throw UsageError("unknown optimizer '" + std::string(text) +
                   "' (expected sgd, adam, nadam or rmsprop)");
}

void OptimizerSpec::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning rate must be positive");
  }
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
  auto unit = [](double v) { return v >= 0.0 && v < 1.0; };
  if (!unit(beta1) || !unit(beta2)) throw UsageError("beta1 and beta2 must lie in [0, 1)");
  if (!unit(rho_decay)) throw UsageError("rmsprop decay must lie in [0, 1)");
}

MomentState init_state(const BowTieModel& model) {
  MomentState state;
  const auto zeros = zero_gradients(model);
  state.first = zeros.layers;
  state.second = zeros.layers;
  return state;
}

void update_parameters(const OptimizerSpec& spec, std::uint64_t step, std::span<double> params,
                       std::span<const double> grads, std::span<double> first,
                       std::span<double> second) {
  const std::size_t n = params.size();
  const double lr = spec.learning_rate;
  const double eps = spec.epsilon;
  switch (spec.rule) {
    case UpdateRule::kSgd:
      for (std::size_t i = 0; i < n; ++i) params[i] -= lr * grads[i];
      break;
    case UpdateRule::kRmsprop: {
      const double rho = spec.rho_decay;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        second[i] = rho * second[i] + (1.0 - rho) * g * g;
        params[i] -= lr * g / (std::sqrt(second[i]) + eps);
      }
      break;
    }
    case UpdateRule::kAdam:
    case UpdateRule::kNadam: {
      const double b1 = spec.beta1;
      const double b2 = spec.beta2;
      const double t = static_cast<double>(step + 1);
      const double c1 = 1.0 - std::pow(b1, t);
      const double c2 = 1.0 - std::pow(b2, t);
      const bool nesterov = spec.rule == UpdateRule::kNadam;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        first[i] = b1 * first[i] + (1.0 - b1) * g;
        second[i] = b2 * second[i] + (1.0 - b2) * g * g;
        const double m_hat = first[i] / c1;
        const double v_hat = second[i] / c2;
        const double numerator = nesterov ? b1 * m_hat + (1.0 - b1) * g / c1 : m_hat;
        params[i] -= lr * numerator / (std::sqrt(v_hat) + eps);
      }
      break;
    }
  }
}

void apply_update(const OptimizerSpec& spec, MomentState& state, BowTieModel& model,
                  const Gradients& grads) {
  const std::size_t depth = model.layers.size();
  if (grads.layers.size() != depth || state.first.size() != depth ||
      state.second.size() != depth) {
    throw DataError("optimizer state or gradients do not match the model's layers");
  }
  for (std::size_t l = 0; l < depth; ++l) {
    auto& layer = model.layers[l];
    const auto& g = grads.layers[l];
    if (g.weights.size() != layer.weights.size() || g.bias.size() != layer.bias.size() ||
        state.first[l].weights.size() != layer.weights.size() ||
        state.second[l].bias.size() != layer.bias.size()) {
      throw DataError("shape mismatch in layer " + std::to_string(l) + " update");
    }
  }
  for (std::size_t l = 0; l < depth; ++l) {
    auto& layer = model.layers[l];
    const auto& g = grads.layers[l];
    update_parameters(spec, state.step, layer.weights, g.weights, state.first[l].weights,
                      state.second[l].weights);
    update_parameters(spec, state.step, layer.bias, g.bias, state.first[l].bias,
                      state.second[l].bias);
    for (double w : layer.bias) {
      if (!std::isfinite(w)) throw DivergenceError("non-finite bias after update");
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) {
        throw DivergenceError("non-finite weight in layer " + std::to_string(l) + " after update");
      }
    }
  }
  ++state.step;
}

std::uint64_t minimize_quadratic_selftest(const OptimizerSpec& spec,
                                          std::uint64_t max_iterations) {
  double w = 5.0;
  double m = 0.0;
  double v = 0.0;
  for (std::uint64_t k = 0; k < max_iterations; ++k) {
    if (std::abs(w) < 1e-3) return k;
    const double g = 2.0 * w;
    update_parameters(spec, k, std::span(&w, 1), std::span(&g, 1), std::span(&m, 1),
                      std::span(&v, 1));
    if (!std::isfinite(w)) throw DivergenceError("quadratic self-test diverged");
  }
  if (std::abs(w) < 1e-3) return max_iterations;
  throw DivergenceError("quadratic self-test did not reach |w| < 1e-3 within " +
                        std::to_string(max_iterations) + " iterations");
}

}  // namespace bowtie
