#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bowtie/error.hpp"
#include "bowtie/net.hpp"
#include "oracles.hpp"

namespace bowtie {
namespace {

ModelConfig small_config(std::uint32_t width, std::vector<std::uint32_t> hidden) {
  ModelConfig c;
  c.input_width = width;
  c.hidden_widths = std::move(hidden);
  return c;
}

BowTieModel zero_model(const ModelConfig& config) {
  auto model = init_model(config);
  for (auto& layer : model.layers) std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
  return model;
}

SparseExample example(std::vector<std::pair<std::uint32_t, double>> entries, std::uint32_t width,
                      Label label = Label::kPositive) {
  return {std::move(entries), width, label};
}

TEST(Init, DeterministicForSeed) {
  auto config = small_config(10, {4, 1});
  config.init_seed = 99;
  const auto a = init_model(config);
  const auto b = init_model(config);
  EXPECT_EQ(a.layers, b.layers);
  config.init_seed = 100;
  EXPECT_NE(init_model(config).layers, a.layers);
}

TEST(Init, ShapesChain) {
  const auto model = init_model(small_config(10, {4, 1}));
  ASSERT_EQ(model.layers.size(), 2u);
  EXPECT_EQ(model.layers[0].inputs, 10u);
  EXPECT_EQ(model.layers[0].outputs, 4u);
  EXPECT_EQ(model.layers[0].weights.size(), 40u);
  EXPECT_EQ(model.layers[1].inputs, 4u);
  EXPECT_EQ(model.layers[1].outputs, 1u);
  for (const auto& layer : model.layers) {
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(Init, GlorotBoundAndNearZeroMean) {
  auto config = small_config(1000, {1000, 1});
  config.init_seed = 5;
  const auto model = init_model(config);
  const auto& w = model.layers[0].weights;
  const double bound = std::sqrt(6.0 / 2000.0);
  double sum = 0.0;
  for (double v : w) {
    ASSERT_LE(std::abs(v), bound);
    sum += v;
  }
  EXPECT_LT(std::abs(sum / static_cast<double>(w.size())), 0.01);
}

TEST(Config, Validation) {
  auto c = small_config(10, {4, 2});
  EXPECT_THROW(c.validate(), UsageError);
  c.hidden_widths = {4, 1};
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c.dropout_rate = 0.2;
  c.discriminator = 1.5;
  EXPECT_THROW(c.validate(), UsageError);
  c.discriminator = 0.5;
  c.input_width = 0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Forward, ZeroWeightsGiveHalf) {
  const auto model = zero_model(small_config(6, {3, 2, 1}));
  const std::vector<SparseExample> batch{example({{0, 1.0}, {4, -2.0}}, 6), example({}, 6)};
  const auto cache = forward(model, batch, false);
  for (double p : cache.probabilities()) EXPECT_EQ(p, 0.5);
}

TEST(Forward, NoDropoutMeansTrainingEqualsInference) {
  std::mt19937_64 rng(1);
  auto config = small_config(12, {5, 3, 1});
  config.dropout_rate = 0.0;
  const auto model = oracle::random_model(rng, config);
  std::vector<SparseExample> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(oracle::random_example(rng, 12));
  const auto train = forward(model, batch, true, 77);
  const auto infer = forward(model, batch, false);
  EXPECT_EQ(train.post, infer.post);
  EXPECT_TRUE(train.dropout_mask.empty());
}

TEST(Forward, WidthMismatch) {
  const auto model = init_model(small_config(6, {2, 1}));
  const std::vector<SparseExample> batch{example({}, 7)};
  EXPECT_THROW(forward(model, batch, false), DataError);
  EXPECT_THROW(predict(model, batch[0]), DataError);
}

TEST(Forward, NonFiniteActivationSignalsDivergence) {
  auto model = zero_model(small_config(2, {1}));
  model.layers[0].weights[0] = 1e308;
  const std::vector<SparseExample> batch{example({{0, 1e308}}, 2)};
  EXPECT_THROW(forward(model, batch, false), DivergenceError);
}

TEST(Forward, SparseMatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::uint32_t> width_dist(1, 64);
  std::uniform_int_distribution<std::uint32_t> hidden_dist(1, 8);
  std::uniform_int_distribution<int> depth_dist(0, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    auto config = small_config(width_dist(rng), {});
    for (int d = depth_dist(rng); d > 0; --d) config.hidden_widths.push_back(hidden_dist(rng));
    config.hidden_widths.push_back(1);
    config.activation = trial % 2 ? Activation::kRectifier : Activation::kNone;
    const auto model = oracle::random_model(rng, config);
    std::vector<SparseExample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(oracle::random_example(rng, config.input_width));
    const auto cache = forward(model, batch, false);
    const auto p = cache.probabilities();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      worst = std::max(worst, std::abs(p[i] - oracle::dense_forward(model, oracle::densify(batch[i]))));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Forward, Deterministic) {
  std::mt19937_64 rng(8);
  const auto model = oracle::random_model(rng, small_config(20, {6, 4, 1}));
  std::vector<SparseExample> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(oracle::random_example(rng, 20));
  EXPECT_EQ(forward(model, batch, true, 1234), forward(model, batch, true, 1234));
  EXPECT_NE(forward(model, batch, true, 1234).dropout_mask,
            forward(model, batch, true, 1235).dropout_mask);
}

TEST(Forward, ProbabilitiesStrictlyInsideUnitIntervalAfterClamp) {
  std::mt19937_64 rng(4);
  const auto model = oracle::random_model(rng, small_config(30, {8, 1}), 40.0);
  std::vector<SparseExample> batch;
  for (int i = 0; i < 200; ++i) batch.push_back(oracle::random_example(rng, 30));
  const auto cache = forward(model, batch, false);
  for (double p : cache.probabilities()) {
    const double q = clamp_probability(p);
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 1.0);
  }
}

// Inverted dropout: the masked activation is unbiased.
TEST(Dropout, ExpectationMatchesInference) {
  std::mt19937_64 rng(31);
  auto config = small_config(10, {6, 5, 1});
  config.dropout_rate = 0.2;
  const auto model = oracle::random_model(rng, config);
  const std::vector<SparseExample> batch{oracle::random_example(rng, 10)};
  const auto layer = *model.dropout_layer();
  const auto reference = forward(model, batch, false).post[layer];
  std::vector<double> mean(reference.size(), 0.0);
  constexpr int kPasses = 10000;
  for (int pass = 0; pass < kPasses; ++pass) {
    const auto cache = forward(model, batch, true, static_cast<std::uint64_t>(pass));
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += cache.post[layer][k] / kPasses;
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    if (std::abs(reference[k]) < 1e-3) continue;
    EXPECT_LT(std::abs(mean[k] - reference[k]) / std::abs(reference[k]), 0.02) << "unit " << k;
  }
}

TEST(Loss, KnownValues) {
  const auto model = zero_model(small_config(1, {1}));
  ForwardCache cache;
  cache.batch_size = 1;
  cache.pre = {{0.0}};
  cache.post = {{0.5}};
  const std::vector<double> one{1.0};
  EXPECT_NEAR(loss(cache, one, model).bce, 0.693147180559945, 1e-12);
  cache.post = {{1.0 - 1e-15}};
  EXPECT_NEAR(loss(cache, one, model).bce, 0.0, 1e-11);
  const std::vector<double> bad{0.5};
  EXPECT_THROW(loss(cache, bad, model), DataError);
  const std::vector<double> two{1.0, 0.0};
  EXPECT_THROW(loss(cache, two, model), DataError);
}

TEST(Loss, L2TermMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto config = small_config(15, {7, 3, 1});
    config.l2_weight = 0.019;
    const auto model = oracle::random_model(rng, config);
    std::vector<SparseExample> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(oracle::random_example(rng, 15));
    const auto value = loss(forward(model, batch, false), labels_of(batch), model);
    EXPECT_NEAR(value.total - value.bce, 0.019 * oracle::sum_squared_weights(model), 1e-12);
  }
}

TEST(Backward, VanishesWhenPredictionsEqualLabels) {
  const auto model = zero_model([] {
    auto c = small_config(3, {2, 1});
    c.l2_weight = 0.0;
    return c;
  }());
  const std::vector<SparseExample> batch{example({{0, 1.0}}, 3, Label::kPositive),
                                         example({{2, 1.0}}, 3, Label::kNegative)};
  auto cache = forward(model, batch, false);
  cache.post.back() = {1.0, 0.0};
  const auto grads = backward(model, batch, cache);
  for (const auto& g : grads.layers) {
    for (double v : g.weights) EXPECT_EQ(v, 0.0);
    for (double v : g.bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, SingleWeightLogisticGradient) {
  auto config = small_config(1, {1});
  config.l2_weight = 0.0;
  const auto model = zero_model(config);
  const std::vector<SparseExample> batch{example({{0, 1.0}}, 1, Label::kPositive)};
  const auto grads = backward(model, batch, forward(model, batch, false));
  EXPECT_DOUBLE_EQ(grads.layers[0].weights[0], -0.5);
  EXPECT_DOUBLE_EQ(grads.layers[0].bias[0], -0.5);
}

TEST(Backward, StaleCacheRejected) {
  const auto model = init_model(small_config(4, {2, 1}));
  const std::vector<SparseExample> one{example({}, 4)};
  const std::vector<SparseExample> two{example({}, 4), example({}, 4)};
  const auto cache = forward(model, one, false);
  EXPECT_THROW(backward(model, two, cache), DataError);
  const auto other = init_model(small_config(4, {3, 2, 1}));
  EXPECT_THROW(backward(other, one, cache), DataError);
}

// The floor keeps gradients below central-difference resolution from
// turning roundoff into relative error.
double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

TEST(Backward, MatchesCentralDifferences) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint32_t> width_dist(1, 8);
  std::uniform_int_distribution<int> depth_dist(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto config = small_config(width_dist(rng), {});
    for (int d = depth_dist(rng); d > 0; --d) config.hidden_widths.push_back(width_dist(rng));
    config.hidden_widths.push_back(1);
    config.activation = trial % 2 ? Activation::kRectifier : Activation::kNone;
    config.l2_weight = trial % 3 ? 0.019 : 0.0;
    config.dropout_rate = trial % 4 == 0 ? 0.3 : 0.0;
    const auto model = oracle::random_model(rng, config);
    std::vector<SparseExample> batch;
    for (int i = 0; i < 5; ++i) batch.push_back(oracle::random_example(rng, config.input_width));

    const std::uint64_t mask_seed = rng();
    const auto grads = backward(model, batch, forward(model, batch, true, mask_seed));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      for (int bias = 0; bias < 2; ++bias) {
        const auto& analytic = bias ? grads.layers[l].bias : grads.layers[l].weights;
        for (std::size_t k = 0; k < analytic.size(); ++k) {
          const double numeric =
              finite_difference_grad(model, batch, {l, bias == 1, k}, 1e-5, mask_seed);
          worst = std::max(worst, relative_error(analytic[k], numeric));
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Predict, DiscriminatorBoundaries) {
  auto config = small_config(3, {1});
  auto model = zero_model(config);
  const auto x = example({{1, 1.0}}, 3);
  auto p = predict(model, x);
  EXPECT_EQ(p.probability, 0.5);
  EXPECT_EQ(p.category, Label::kPositive);

  model.config.discriminator = 0.0;
  model.layers[0].bias[0] = -30.0;
  EXPECT_EQ(predict(model, x).category, Label::kPositive);

  model.config.discriminator = 1.0;
  model.layers[0].bias[0] = 5.0;
  p = predict(model, x);
  EXPECT_LT(p.probability, 1.0);
  EXPECT_EQ(p.category, Label::kNegative);
}

TEST(FiniteDifference, QuadraticAndBadStep) {
  auto f = [](double w) { return w * w; };
  EXPECT_NEAR(central_difference(f, 3.0, 1e-5), 6.0, 1e-8);
  EXPECT_THROW(central_difference(f, 3.0, 0.0), UsageError);
  const auto model = init_model(small_config(2, {1}));
  const std::vector<SparseExample> batch{example({}, 2)};
  EXPECT_THROW(finite_difference_grad(model, batch, {0, false, 0}, 0.0), UsageError);
}

}  // namespace
}  // namespace bowtie
