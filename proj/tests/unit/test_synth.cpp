#include <gtest/gtest.h>

#include <vector>

#include "tenexp/errors.hpp"
#include "tenexp/linalg.hpp"
#include "tenexp/synth.hpp"
#include "test_util.hpp"

using namespace tenexp;

namespace {

// Number of singular values above 1e-10 relative to the largest.
std::size_t effective_rank(const Matrix& m) {
  const Vector s = singular_values(m);
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(s.size()) && s(r) > 1e-10 * s(0)) ++r;
  return r;
}

}  // namespace

TEST(Synth, TuckerUnfoldingRanksAtMostRank) {
  const SynthResult r = synth({SynthKind::tucker, {50, 50, 50}, 3, 10, 1});
  ASSERT_EQ(r.tensor.shape(), (Shape{50, 50, 50}));
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_LE(effective_rank(mode_n_unfold(r.tensor, n)), 3u);
  ASSERT_EQ(r.components.size(), 1u);
  EXPECT_EQ(r.components[0].kind(), DecompositionKind::tucker);
  EXPECT_EQ(r.weights, std::vector<double>{1.0});
}

TEST(Synth, TfModeThreeRankAtMostLatent) {
  const SynthResult r = synth({SynthKind::tf, {20, 20, 30}, 3, 5, 2});
  EXPECT_LE(effective_rank(mode_n_unfold(r.tensor, 3)), 5u);
  EXPECT_EQ(r.components[0].kind(), DecompositionKind::tf);
}

TEST(Synth, FctnUnfoldingRankBound) {
  const SynthResult r = synth({SynthKind::fctn, {12, 12, 12}, 2, 10, 3});
  // Mode n touches two edges of rank 2.
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_LE(effective_rank(mode_n_unfold(r.tensor, n)), 4u);
}

TEST(Synth, FactorsClippedToUnitInterval) {
  const SynthResult r = synth({SynthKind::mixture, {8, 9, 10}, 3, 4, 4});
  ASSERT_EQ(r.components.size(), 3u);
  for (const auto& c : r.components) {
    const ParamSet p{{c}, GateState{{0.0}, 1, std::nullopt}};
    for (auto b : parameter_blocks(p, UpdateMask::factors_only(1)))
      for (double v : b) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
  }
}

TEST(Synth, MixtureIsMeanOfComponents) {
  const SynthResult r = synth({SynthKind::mixture, {8, 9, 10}, 3, 4, 5});
  ASSERT_EQ(r.components.size(), 3u);
  EXPECT_EQ(r.components[0].kind(), DecompositionKind::tucker);
  EXPECT_EQ(r.components[1].kind(), DecompositionKind::fctn);
  EXPECT_EQ(r.components[2].kind(), DecompositionKind::tf);
  DenseTensor mean(r.tensor.shape());
  for (const auto& c : r.components) mean = mean + (1.0 / 3.0) * compose(c);
  EXPECT_LE(tenexp::testing::max_abs_diff(mean, r.tensor), 1e-12);
  for (double w : r.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
}

TEST(Synth, DeterministicPerSeed) {
  const SynthSpec spec{SynthKind::mixture, {6, 7, 8}, 2, 3, 11};
  EXPECT_EQ(synth(spec).tensor, synth(spec).tensor);
  SynthSpec other = spec;
  other.seed = 12;
  EXPECT_FALSE(synth(spec).tensor == synth(other).tensor);
}

TEST(Synth, HigherOrderTuckerAndFctn) {
  const SynthResult t = synth({SynthKind::tucker, {4, 5, 3, 4}, 2, 10, 6});
  EXPECT_EQ(t.tensor.order(), 4u);
  const SynthResult f = synth({SynthKind::fctn, {4, 5, 3, 4}, 2, 10, 6});
  EXPECT_EQ(f.tensor.shape(), (Shape{4, 5, 3, 4}));
}

TEST(Synth, RejectsInvalidSpecs) {
  EXPECT_THROW(synth({SynthKind::tucker, {}, 3, 10, 0}), ArgumentError);
  EXPECT_THROW(synth({SynthKind::tucker, {5, 0, 5}, 3, 10, 0}), ArgumentError);
  EXPECT_THROW(synth({SynthKind::tf, {5, 5, 5, 5}, 3, 2, 0}), ArgumentError);
  EXPECT_THROW(synth({SynthKind::tf, {5, 5, 5}, 3, 6, 0}), ArgumentError);
  EXPECT_THROW(synth({SynthKind::fctn, {5, 5, 5}, 0, 2, 0}), ArgumentError);
  EXPECT_THROW(parse_synth_kind("cp"), ArgumentError);
  EXPECT_EQ(parse_synth_kind("mixture"), SynthKind::mixture);
}
