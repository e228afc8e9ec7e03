#include "promise/predictor.hpp"

#include <gtest/gtest.h>

using namespace promise;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<long>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  VectorXd x = vec({1.0, -2.0, 3.0});
  Adam adam(3);
  adam.step(x, VectorXd::Zero(3));
  EXPECT_EQ(x, vec({1.0, -2.0, 3.0}));
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, FirstStepMovesByStepSize) {
  AdamConfig cfg;
  cfg.step_size = 0.25;
  VectorXd x = vec({0.0, 0.0});
  Adam adam(2, cfg);
  adam.step(x, vec({3.0, -0.5}));
  // bias correction makes the first update step_size * g / (|g| + eps)
  EXPECT_NEAR(x[0], -0.25, 1e-6);
  EXPECT_NEAR(x[1], 0.25, 1e-6);
}

TEST(Adam, MinimizesQuadraticBowl) {
  VectorXd x = vec({5.0, -4.0, 3.0, 2.0});
  Adam adam(4, {0.05, 0.9, 0.999, 1e-8});
  for (int t = 0; t < 2000 && x.norm() >= 1e-3; ++t) adam.step(x, 2.0 * x);
  EXPECT_LT(x.norm(), 1e-3);
}

TEST(Adam, RejectsShapeMismatch) {
  VectorXd x = vec({1.0});
  Adam adam(2);
  EXPECT_THROW(adam.step(x, vec({1.0})), std::invalid_argument);
  EXPECT_THROW(Adam(0), std::invalid_argument);
  EXPECT_THROW(Adam(2, {0.0, 0.9, 0.999, 1e-8}), std::invalid_argument);
}

TEST(Softmax, NormalizesAndOrdersLogits) {
  const VectorXd p = softmax(vec({2.0, 0.0}));
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  EXPECT_NEAR(p[0], std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-12);
  const VectorXd shifted = softmax(vec({1002.0, 1000.0}));
  EXPECT_NEAR((p - shifted).lpNorm<Eigen::Infinity>(), 0.0, 1e-12);
}

TEST(CrossEntropy, MatchesHandValues) {
  EXPECT_NEAR(cross_entropy(vec({1.0, 0.0}), vec({0.5, 0.5})), std::log(2.0), 1e-12);
  EXPECT_NEAR(cross_entropy(vec({0.5, 0.5}), vec({0.5, 0.5})), std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(cross_entropy(vec({1.0, 0.0}), vec({1.0, 0.0})), 0.0);
}

TEST(Predictor, LearnsSeparableMapping) {
  // two orthogonal inputs, one class each
  std::vector<VectorXd> xs = {vec({1.0, 0.0}), vec({0.0, 1.0})};
  std::vector<VectorXd> ys = {vec({1.0, 0.0, 0.0}), vec({0.0, 0.0, 1.0})};
  Predictor c = fit_predictor(xs, ys);
  double ce = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) ce += cross_entropy(ys[i], c.forward(xs[i]));
  EXPECT_LT(ce / 2.0, 0.1);
}

TEST(Predictor, SingleExampleIsMemorized) {
  Predictor c = fit_predictor({vec({1.0, 1.0})}, {vec({0.0, 1.0})});
  EXPECT_GT(c.forward(vec({1.0, 1.0}))[1], 0.9);
}

TEST(Predictor, TrainingIsDeterministic) {
  std::vector<VectorXd> xs = {vec({1.0, 0.0}), vec({0.0, 1.0}), vec({1.0, 1.0})};
  std::vector<VectorXd> ys = {vec({1.0, 0.0}), vec({0.0, 1.0}), vec({0.5, 0.5})};
  Predictor a = fit_predictor(xs, ys);
  Predictor b = fit_predictor(xs, ys);
  EXPECT_EQ((a.weight() - b.weight()).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ((a.bias() - b.bias()).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Predictor, RejectsBadDatasets) {
  EXPECT_THROW(fit_predictor({}, {}), std::invalid_argument);
  EXPECT_THROW(fit_predictor({vec({1.0})}, {}), std::invalid_argument);
}

TEST(Predictor, InputGradientMatchesFiniteDifferences) {
  std::vector<VectorXd> xs = {vec({1.0, 0.0, 0.5}), vec({0.0, 1.0, -0.5})};
  std::vector<VectorXd> ys = {vec({1.0, 0.0}), vec({0.0, 1.0})};
  Predictor c = fit_predictor(xs, ys, {80, {0.1, 0.9, 0.999, 1e-8}});

  // loss = CE(target, c(x)); dL/dp_i = -target_i / p_i
  const VectorXd x = vec({0.3, -0.2, 0.7});
  const VectorXd target = vec({0.25, 0.75});
  const VectorXd p = c.forward(x);
  VectorXd dp(2);
  for (int i = 0; i < 2; ++i) dp[i] = -target[i] / p[i];
  const VectorXd grad = c.backward_input(p, dp);

  const double h = 1e-6;
  for (int d = 0; d < 3; ++d) {
    VectorXd hi = x, lo = x;
    hi[d] += h;
    lo[d] -= h;
    const double fd =
        (cross_entropy(target, c.forward(hi)) - cross_entropy(target, c.forward(lo))) / (2.0 * h);
    EXPECT_NEAR(grad[d], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}
