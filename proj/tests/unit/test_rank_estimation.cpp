#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/errors.hpp"
#include "tenexp/rank_estimation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace tenexp;
using namespace tenexp::testing;

namespace {

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST(Erm, DiagonalEnergyExample) {
  Matrix m = Matrix::Zero(4, 4);
  m.diagonal() << 3.0, 2.0, 1.0, 0.5;  // energies 9, 4, 1, 0.25 of 14.25
  EXPECT_EQ(erm(m, 0.5).rank, 1u);
  EXPECT_EQ(erm(m, 0.9).rank, 2u);
  EXPECT_EQ(erm(m, 0.95).rank, 3u);
  EXPECT_EQ(erm(m, 0.99).rank, 4u);
  EXPECT_EQ(erm(m, 1.0).rank, 4u);
}

TEST(Erm, TauOneOnRankDeficientMatrixGivesNumericalRank) {
  Rng rng(1);
  const Matrix m = random_matrix(8, 2, rng) * random_matrix(2, 6, rng);
  EXPECT_LE(erm(m, 1.0).rank, 6u);
  EXPECT_GE(erm(m, 1.0).rank, 2u);
  EXPECT_EQ(erm(m, 0.999999).rank, 2u);
}

TEST(Erm, BasisIsLeadingLeftSingularVectors) {
  Rng rng(2);
  const Matrix m = random_matrix(6, 5, rng);
  const ErmResult r = erm(m, 0.9);
  ASSERT_EQ(r.basis.rows(), 6);
  ASSERT_EQ(static_cast<std::size_t>(r.basis.cols()), r.rank);
  const Matrix gram = r.basis.transpose() * r.basis;
  EXPECT_LE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
  // Each basis vector is an eigenvector of m m^T.
  const Matrix mmt = m * m.transpose();
  for (Eigen::Index c = 0; c < r.basis.cols(); ++c) {
    const Eigen::VectorXd v = r.basis.col(c);
    const double lambda = v.dot(mmt * v);
    EXPECT_LE((mmt * v - lambda * v).norm(), 1e-9 * mmt.norm());
  }
}

TEST(Erm, MatchesCumulativeEnergyOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 2 + rng.uniform_index(9), cols = 2 + rng.uniform_index(9);
    Matrix m = random_matrix(rows, cols, rng);
    // Spread the spectrum so the threshold lands at different ranks.
    const Matrix scale = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(cols), 1.0, 0.05).asDiagonal();
    m = m * scale;
    for (double tau : {0.5, 0.9, 0.99, 1.0}) {
      const std::size_t got = erm(m, tau).rank;
      EXPECT_TRUE(contains(oracle_ranks(m, tau), got)) << "trial " << trial << " tau " << tau << " rank " << got;
    }
  }
}

TEST(Erm, RejectsBadThresholdAndZeroInput) {
  EXPECT_THROW(erm(Matrix::Identity(2, 2), 0.0), ArgumentError);
  EXPECT_THROW(erm(Matrix::Identity(2, 2), 1.5), ArgumentError);
  EXPECT_THROW(erm(Matrix::Zero(3, 3), 0.9), DegenerateInputError);
}

TEST(TuckerRanks, ExactLowRankSyntheticRecoversRanks) {
  Rng rng(4);
  int hits = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    const std::vector<std::size_t> ranks = trial % 2 ? std::vector<std::size_t>{2, 3, 2} : std::vector<std::size_t>{3, 3, 3};
    const DenseTensor x = tucker_compose(random_tucker_factors({20, 20, 20}, ranks, rng));
    if (estimate_tucker_ranks(x, 0.999).ranks == ranks) ++hits;
  }
  EXPECT_GE(hits, 38);
}

TEST(TuckerRanks, TauOneIsFullMultilinearRank) {
  Rng rng(5);
  const DenseTensor x = random_tensor({3, 4, 5}, rng);
  EXPECT_EQ(estimate_tucker_ranks(x, 1.0).ranks, (std::vector<std::size_t>{3, 4, 5}));
}

TEST(TuckerRanks, RejectsMatrices) {
  Rng rng(6);
  EXPECT_THROW(estimate_tucker_ranks(random_tensor({3, 4}, rng), 0.9), ArgumentError);
}

TEST(FctnRanks, PairwiseMinimumOfModeRanks) {
  const FctnRanks r = fctn_ranks_from_mode_ranks({2, 5, 3});
  EXPECT_EQ(r.get(0, 1), 2u);
  EXPECT_EQ(r.get(1, 2), 3u);
  EXPECT_EQ(r.get(0, 2), 2u);
  EXPECT_EQ(r.get(2, 0), 2u);
}

TEST(TfRanks, SharedSliceSpacesRecoverTubalAndLatent) {
  // Slices U D_t V^T share column and row spaces, so any mix of them along
  // mode 3 keeps rank 3; an orthonormal 20 x 5 map sets the latent dimension.
  Rng rng(7);
  const std::size_t latent = 5, tubal = 3;
  const Matrix u = random_matrix(15, tubal, rng), v = random_matrix(15, tubal, rng);
  DenseTensor core({15, 15, latent});
  for (std::size_t t = 0; t < latent; ++t) {
    const Matrix s = u * random_matrix(tubal, tubal, rng) * v.transpose();
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t j = 0; j < 15; ++j) core.at({i, j, t}) = s(i, j);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(20, latent, rng)).householderQ() *
                   Matrix::Identity(20, latent);
  const DenseTensor x = mode_n_product(core, q, 3);
  const TfRankEstimate est = estimate_tf_ranks(x, 0.999999);
  EXPECT_EQ(est.latent_dim, latent);
  EXPECT_EQ(est.tubal_rank, tubal);
  EXPECT_EQ(est.transform_init.rows(), 20);
  EXPECT_EQ(static_cast<std::size_t>(est.transform_init.cols()), latent);
}

TEST(TfRanks, GenericTfSyntheticInflatesTubalRank) {
  // Rotating to the mode-3 principal basis mixes slices with different column
  // spaces, so the estimated tubal rank grows to about latent * R.
  Rng rng(8);
  TFFactors f{random_tensor({20, 3, 5}, rng), random_tensor({3, 20, 5}, rng), random_matrix(20, 5, rng)};
  const TfRankEstimate est = estimate_tf_ranks(tf_compose(f), 0.999999);
  EXPECT_EQ(est.latent_dim, 5u);
  EXPECT_GT(est.tubal_rank, 3u);
  EXPECT_LE(est.tubal_rank, 15u);
}

TEST(TfRanks, RejectsNonThirdOrder) {
  Rng rng(9);
  EXPECT_THROW(estimate_tf_ranks(random_tensor({3, 3, 3, 3}, rng), 0.9), ArgumentError);
}

TEST(EstimateRanks, OrderFourSkipsTfBranch) {
  Rng rng(10);
  const RankEstimate est = estimate_ranks(random_tensor({3, 3, 3, 3}, rng), EnergyThresholds{});
  EXPECT_FALSE(est.tf.has_value());
  EXPECT_EQ(est.tucker_ranks.size(), 4u);
  EXPECT_EQ(est.fctn_ranks.order(), 4u);
}

TEST(EstimateRanks, SeparateFctnThreshold) {
  Rng rng(11);
  const DenseTensor x = random_tensor({6, 6, 6}, rng);
  EnergyThresholds th{0.5, 1.0, 0.9};
  const RankEstimate est = estimate_ranks(x, th);
  EXPECT_EQ(est.fctn_ranks, fctn_ranks_from_mode_ranks({6, 6, 6}));
  ASSERT_TRUE(est.tf.has_value());
  EXPECT_THROW(estimate_ranks(x, EnergyThresholds::uniform(0.0)), ArgumentError);
}

TEST(Erm, DiagThreeTwoOneThresholds) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 3.0, 2.0, 1.0;
  EXPECT_EQ(erm(m, 0.6).rank, 1u);   // 9/14
  EXPECT_EQ(erm(m, 0.93).rank, 3u);  // 13/14 falls short
}

TEST(Erm, RankOneMatrixAnyTau) {
  Rng rng(12);
  const Matrix m = random_matrix(5, 1, rng) * random_matrix(1, 4, rng);
  for (double tau : {0.1, 0.5, 0.99}) EXPECT_EQ(erm(m, tau).rank, 1u);
  EXPECT_EQ(erm(random_matrix(5, 5, rng), 1.0).rank, 5u);
}

TEST(TuckerRanks, AllOnesTensorIsRankOne) {
  const DenseTensor x = DenseTensor::filled({3, 4, 5}, 1.0);
  EXPECT_EQ(estimate_tucker_ranks(x, 0.999).ranks, (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_EQ(estimate_fctn_ranks(x, 0.999), FctnRanks(3, 1));
}

TEST(TuckerRanks, ExactTwoThreeTwo) {
  Rng rng(13);
  const DenseTensor x = tucker_compose(random_tucker_factors({8, 8, 8}, {2, 3, 2}, rng));
  EXPECT_EQ(estimate_tucker_ranks(x, 0.999).ranks, (std::vector<std::size_t>{2, 3, 2}));
}

TEST(TfRanks, RankOneTransformedSlabs) {
  Rng rng(14);
  const Matrix u = random_matrix(6, 1, rng), v = random_matrix(7, 1, rng);
  DenseTensor x({6, 7, 5});
  for (std::size_t k = 0; k < 5; ++k) {
    const double c = rng.normal(0, 1);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 7; ++j) x.at({i, j, k}) = c * u(i, 0) * v(j, 0);
  }
  EXPECT_EQ(estimate_tf_ranks(x, 0.999).tubal_rank, 1u);
}
