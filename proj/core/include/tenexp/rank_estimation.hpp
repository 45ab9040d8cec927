#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

struct ErmResult {
  std::size_t rank = 0;
  Matrix basis;  // leading `rank` left singular vectors
};

struct EnergyThresholds {
  double tau_tucker = 0.95;
  double tau_fctn = 0.95;
  double tau_tf = 0.95;

  static EnergyThresholds uniform(double tau) { return {tau, tau, tau}; }
  void validate() const;
};

struct TuckerRankEstimate {
  std::vector<std::size_t> ranks;
  std::vector<Matrix> bases;
};

struct TfRankEstimate {
  std::size_t tubal_rank = 0;
  std::size_t latent_dim = 0;
  Matrix transform_init;  // I_3 x latent_dim
};

struct RankEstimate {
  std::vector<std::size_t> tucker_ranks;
  FctnRanks fctn_ranks;
  std::optional<TfRankEstimate> tf;
  std::vector<Matrix> tucker_bases;
};

// Smallest k whose cumulative squared-singular-value share reaches tau.
ErmResult erm(const Matrix& m, double tau);

TuckerRankEstimate estimate_tucker_ranks(const DenseTensor& x, double tau);
FctnRanks estimate_fctn_ranks(const DenseTensor& x, double tau);
FctnRanks fctn_ranks_from_mode_ranks(const std::vector<std::size_t>& mode_ranks);
TfRankEstimate estimate_tf_ranks(const DenseTensor& x, double tau);

// Runs all three branches; the TF branch only for third-order input.
RankEstimate estimate_ranks(const DenseTensor& x, const EnergyThresholds& thresholds);

}  // namespace tenexp
