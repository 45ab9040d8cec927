#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "tenexp/errors.hpp"
#include "tenexp/optim.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace tenexp;
using namespace tenexp::testing;

namespace {

ParamSet single(DecompositionKind kind, const Shape& shape, Rng& rng) {
  return ParamSet{{random_candidate(kind, shape, 2, 3, rng)}, GateState{{0.0}, 1, std::nullopt}};
}

ParamSet mixture(const Shape& shape, Rng& rng, std::size_t k) {
  ParamSet p;
  for (auto kind : {DecompositionKind::tucker, DecompositionKind::fctn, DecompositionKind::tf})
    p.candidates.push_back(random_candidate(kind, shape, 2, 3, rng));
  p.gates = GateState{{rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)}, k, std::nullopt};
  return p;
}

}  // namespace

TEST(Loss, HandComputedMaskedSquaredError) {
  TuckerFactors f{DenseTensor::filled({1, 1, 1}, 1.0), {Matrix::Ones(2, 1), Matrix::Ones(2, 1), Matrix::Ones(1, 1)}};
  ParamSet p{{CandidateDecomposition{f, {2, 2, 1}}}, GateState{{0.0}, 1, std::nullopt}};
  const DenseTensor observed({2, 2, 1}, {1.0, 3.0, 0.0, 100.0});
  const DenseTensor mask({2, 2, 1}, {1.0, 1.0, 1.0, 0.0});
  // Residuals 0, -2, 1 on the observed entries.
  EXPECT_DOUBLE_EQ(loss(p, observed, mask), 5.0);
}

TEST(Loss, MixtureEstimateIsWeightedSum) {
  Rng rng(1);
  const Shape shape{3, 4, 2};
  const ParamSet p = mixture(shape, rng, 2);
  const DenseTensor observed = random_tensor(shape, rng);
  const Evaluation ev = evaluate(p, observed, DenseTensor::filled(shape, 1.0));
  DenseTensor expected(shape);
  for (auto i : ev.weights.support) expected = expected + ev.weights.lambdas[i] * compose(p.candidates[i]);
  EXPECT_LE(tenexp::testing::max_abs_diff(ev.estimate, expected), 1e-13);
  EXPECT_EQ(ev.weights.support.size(), 2u);
}

TEST(Loss, RejectsNonBinaryMaskAndShapeMismatch) {
  Rng rng(2);
  const ParamSet p = single(DecompositionKind::tucker, {2, 2, 2}, rng);
  const DenseTensor observed({2, 2, 2});
  DenseTensor mask = DenseTensor::filled({2, 2, 2}, 1.0);
  mask[3] = 0.5;
  EXPECT_THROW(loss(p, observed, mask), ArgumentError);
  EXPECT_THROW(loss(p, DenseTensor({2, 2, 3}), DenseTensor({2, 2, 3})), ArgumentError);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, TuckerFactorsAndCore) {
  Rng rng(100 + GetParam());
  const Shape shape{3, 4, 2};
  const ParamSet p = single(DecompositionKind::tucker, shape, rng);
  EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.6), UpdateMask::everything(1)), 1e-4);
}

TEST_P(GradientCheck, TuckerOrderFour) {
  Rng rng(200 + GetParam());
  const Shape shape{2, 3, 2, 3};
  const ParamSet p = single(DecompositionKind::tucker, shape, rng);
  EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.6), UpdateMask::everything(1)), 1e-4);
}

TEST_P(GradientCheck, FctnCores) {
  Rng rng(300 + GetParam());
  const Shape shape{3, 4, 2};
  const ParamSet p = single(DecompositionKind::fctn, shape, rng);
  EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.6), UpdateMask::everything(1)), 1e-4);
}

TEST_P(GradientCheck, FctnOrderFour) {
  Rng rng(400 + GetParam());
  const Shape shape{2, 3, 2, 2};
  const ParamSet p = single(DecompositionKind::fctn, shape, rng);
  EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.6), UpdateMask::everything(1)), 1e-4);
}

TEST_P(GradientCheck, TfSlicesAndTransform) {
  Rng rng(500 + GetParam());
  const Shape shape{3, 4, 5};
  const ParamSet p = single(DecompositionKind::tf, shape, rng);
  EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.6), UpdateMask::everything(1)), 1e-4);
}

TEST_P(GradientCheck, MixtureWithGates) {
  Rng rng(600 + GetParam());
  const Shape shape{3, 4, 3};
  for (std::size_t k = 2; k <= 3; ++k) {
    ParamSet p = mixture(shape, rng, k);
    // Keep the top-k support away from ties so small perturbations cannot change it.
    p.gates.scores = {0.4, -0.3, 0.1};
    EXPECT_LE(max_fd_error(p, random_tensor(shape, rng), random_mask(shape, rng, 0.7), UpdateMask::everything(3)), 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Range(0, 20));

TEST(Gradients, UnselectedBlocksAreZero) {
  Rng rng(7);
  const Shape shape{3, 3, 3};
  const ParamSet p = mixture(shape, rng, 2);
  const auto observed = random_tensor(shape, rng);
  const auto mask = DenseTensor::filled(shape, 1.0);
  const GradientResult g = gradients(p, observed, mask, UpdateMask::factors_only(3));
  for (double v : g.grad.gates.scores) EXPECT_EQ(v, 0.0);
  const auto off = top_k_indices(p.gates.scores, 3);
  const GateWeights w = p.gates.weights();
  for (std::size_t i = 0; i < 3; ++i) {
    if (w.lambdas[i] != 0.0) continue;
    for (auto b : parameter_blocks(g.grad, UpdateMask::single_factor(3, i)))
      for (double v : b) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(off.size(), 3u);
}

TEST(Gradients, ThreadCountDoesNotChangeResult) {
  Rng rng(8);
  const Shape shape{4, 3, 3};
  const ParamSet p = mixture(shape, rng, 3);
  const auto observed = random_tensor(shape, rng);
  const auto mask = random_mask(shape, rng, 0.5);
  const GradientResult a = gradients(p, observed, mask, true, 1);
  const GradientResult b = gradients(p, observed, mask, true, 3);
  const auto ba = parameter_blocks(a.grad, UpdateMask::everything(3));
  const auto bb = parameter_blocks(b.grad, UpdateMask::everything(3));
  ASSERT_EQ(ba.size(), bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i)
    for (std::size_t j = 0; j < ba[i].size(); ++j) EXPECT_EQ(ba[i][j], bb[i][j]);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Rng rng(9);
  ParamSet p = single(DecompositionKind::tucker, {2, 2, 2}, rng);
  const ParamSet before = p;
  ParamSet g = zeros_like(p);
  for (auto b : parameter_blocks(g, UpdateMask::everything(1)))
    for (double& v : b) v = rng.normal(0, 1) > 0 ? 3.0 : -0.02;
  AdamState state(p, AdamSettings{0.1, 0.9, 0.999, 1e-12});
  adam_step(state, p, g, UpdateMask::factors_only(1));
  const auto now = parameter_blocks(std::as_const(p), UpdateMask::factors_only(1));
  const auto was = parameter_blocks(before, UpdateMask::factors_only(1));
  const auto grad = parameter_blocks(std::as_const(g), UpdateMask::factors_only(1));
  for (std::size_t b = 0; b < now.size(); ++b)
    for (std::size_t j = 0; j < now[b].size(); ++j)
      EXPECT_NEAR(now[b][j] - was[b][j], grad[b][j] > 0 ? -0.1 : 0.1, 1e-9);
  EXPECT_EQ(state.step, 1u);
  EXPECT_EQ(p.gates.scores, before.gates.scores);
}

TEST(Adam, MatchesReferenceRecurrenceOnScalar) {
  Rng rng(11);
  ParamSet p = single(DecompositionKind::tucker, {2, 2, 2}, rng);
  p.gates.scores = {1.0};
  AdamSettings s{0.05, 0.8, 0.99, 1e-8};
  AdamState state(p, s);
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const double grad = 2.0 * x - 0.5;
    ParamSet g = zeros_like(p);
    g.gates.scores[0] = 2.0 * p.gates.scores[0] - 0.5;
    adam_step(state, p, g, UpdateMask::gates_only(1));
    m = s.beta1 * m + (1 - s.beta1) * grad;
    v = s.beta2 * v + (1 - s.beta2) * grad * grad;
    x -= s.learning_rate * (m / (1 - std::pow(s.beta1, t))) / (std::sqrt(v / (1 - std::pow(s.beta2, t))) + s.epsilon);
    EXPECT_NEAR(p.gates.scores[0], x, 1e-14);
  }
}

TEST(Adam, ConvergesOnLeastSquaresFit) {
  Rng rng(10);
  const Shape shape{4, 4, 4};
  const ParamSet truth = single(DecompositionKind::tucker, shape, rng);
  const DenseTensor observed = compose(truth.candidates[0]);
  const DenseTensor mask = DenseTensor::filled(shape, 1.0);
  ParamSet p = single(DecompositionKind::tucker, shape, rng);
  AdamState state(p, AdamSettings{});
  const double start = loss(p, observed, mask);
  for (int t = 0; t < 3000; ++t) {
    const GradientResult g = gradients(p, observed, mask, false);
    adam_step(state, p, g.grad, UpdateMask::factors_only(1));
  }
  EXPECT_LT(loss(p, observed, mask), 1e-3 * start);
}

TEST(Adam, RejectsBadSettings) {
  Rng rng(12);
  const ParamSet p = single(DecompositionKind::tucker, {2, 2, 2}, rng);
  EXPECT_THROW(AdamState(p, AdamSettings{0.0}), ArgumentError);
  EXPECT_THROW(AdamState(p, AdamSettings{0.1, 1.0}), ArgumentError);
}

TEST(Loss, ConstantHalfResidualOnTwoCubed) {
  TuckerFactors f{DenseTensor::filled({1, 1, 1}, 0.5), {Matrix::Ones(2, 1), Matrix::Ones(2, 1), Matrix::Ones(2, 1)}};
  ParamSet p{{CandidateDecomposition{f, {2, 2, 2}}}, GateState{{0.0}, 1, std::nullopt}};
  const auto full = DenseTensor::filled({2, 2, 2}, 1.0);
  EXPECT_DOUBLE_EQ(loss(p, DenseTensor({2, 2, 2}), full), 2.0);
  EXPECT_EQ(loss(p, DenseTensor({2, 2, 2}), DenseTensor({2, 2, 2})), 0.0);
  EXPECT_EQ(loss(p, DenseTensor::filled({2, 2, 2}, 0.5), full), 0.0);
}

TEST(Gradients, ZeroResidualGivesZeroGradients) {
  Rng rng(13);
  const Shape shape{3, 3, 3};
  const ParamSet p = mixture(shape, rng, 3);
  const DenseTensor observed = evaluate(p, DenseTensor(shape), DenseTensor::filled(shape, 1.0)).estimate;
  const GradientResult g = gradients(p, observed, DenseTensor::filled(shape, 1.0), true);
  for (auto b : parameter_blocks(g.grad, UpdateMask::everything(3)))
    for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, UnobservedValuesDoNotMatter) {
  Rng rng(14);
  const Shape shape{3, 4, 3};
  const ParamSet p = mixture(shape, rng, 3);
  const DenseTensor mask = random_mask(shape, rng, 0.5);
  DenseTensor a = random_tensor(shape, rng), b = a;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (mask[i] == 0.0) b[i] = rng.normal(0, 100);
  const auto ga = gradients(p, a, mask, true), gb = gradients(p, b, mask, true);
  const auto xa = parameter_blocks(ga.grad, UpdateMask::everything(3));
  const auto xb = parameter_blocks(gb.grad, UpdateMask::everything(3));
  for (std::size_t i = 0; i < xa.size(); ++i)
    for (std::size_t j = 0; j < xa[i].size(); ++j) EXPECT_EQ(xa[i][j], xb[i][j]);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(15);
  ParamSet p = single(DecompositionKind::fctn, {2, 3, 2}, rng);
  const ParamSet before = p;
  AdamState state(p, AdamSettings{});
  for (int t = 0; t < 10; ++t) adam_step(state, p, zeros_like(p), UpdateMask::everything(1));
  const auto now = parameter_blocks(std::as_const(p), UpdateMask::everything(1));
  const auto was = parameter_blocks(before, UpdateMask::everything(1));
  for (std::size_t b = 0; b < now.size(); ++b)
    for (std::size_t j = 0; j < now[b].size(); ++j) EXPECT_EQ(now[b][j], was[b][j]);
}

TEST(Adam, OneDimensionalQuadratic) {
  Rng rng(16);
  ParamSet p = single(DecompositionKind::tucker, {2, 2, 2}, rng);
  p.gates.scores = {0.0};
  AdamState state(p, AdamSettings{0.1});
  for (int t = 0; t < 500; ++t) {
    ParamSet g = zeros_like(p);
    g.gates.scores[0] = 2.0 * (p.gates.scores[0] - 3.0);
    adam_step(state, p, g, UpdateMask::gates_only(1));
  }
  EXPECT_LT(std::abs(p.gates.scores[0] - 3.0), 1e-3);
}

TEST(Adam, SmallStepDoesNotIncreaseLoss) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const Shape shape{3, 4, 3};
    ParamSet p = mixture(shape, rng, 3);
    const DenseTensor observed = random_tensor(shape, rng);
    const DenseTensor mask = random_mask(shape, rng, 0.6);
    const double before = loss(p, observed, mask);
    AdamState state(p, AdamSettings{1e-3});
    adam_step(state, p, gradients(p, observed, mask, true).grad, UpdateMask::everything(3));
    EXPECT_LE(loss(p, observed, mask), before) << "seed " << seed;
  }
}
