#pragma once

// First-order update rules for BowTieModel parameters.
//
//   sgd:      w -= lr * g
//   rmsprop:  v = rho v + (1 - rho) g^2;            w -= lr g / (sqrt(v) + eps)
//   adam:     m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
//             w -= lr mhat / (sqrt(vhat) + eps)
//   nadam:    as adam with numerator b1 mhat + (1 - b1) g / (1 - b1^t)
//
// with mhat = m / (1 - b1^t), vhat = v / (1 - b2^t) and t = step + 1.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bowtie/net.hpp"

namespace bowtie {

enum class UpdateRule { kSgd, kAdam, kNadam, kRmsprop };
std::string_view to_string(UpdateRule rule);
UpdateRule parse_update_rule(std::string_view text);

struct OptimizerSpec {
  UpdateRule rule = UpdateRule::kNadam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho_decay = 0.9;
  double epsilon = 1e-7;

  void validate() const;
};

// Moment accumulators laid out like the model's layers, plus the step count.
struct MomentState {
  std::vector<LayerGradient> first;
  std::vector<LayerGradient> second;
  std::uint64_t step = 0;
};

MomentState init_state(const BowTieModel& model);

// One update. Throws DataError on shape mismatch and DivergenceError when an
// updated parameter is not finite (the model is left partially updated).
void apply_update(const OptimizerSpec& spec, MomentState& state, BowTieModel& model,
                  const Gradients& grads);

// Same rules on a flat parameter vector; the building block of apply_update.
void update_parameters(const OptimizerSpec& spec, std::uint64_t step, std::span<double> params,
                       std::span<const double> grads, std::span<double> first,
                       std::span<double> second);

// Minimizes f(w) = w^2 from w = 5 and returns the number of updates needed to
// reach |w| < 1e-3. Throws DivergenceError after `max_iterations` updates.
std::uint64_t minimize_quadratic_selftest(const OptimizerSpec& spec,
                                          std::uint64_t max_iterations = 100000);

}  // namespace bowtie
