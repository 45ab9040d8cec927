#include "tenexp/rank_estimation.hpp"

#include <algorithm>
#include <string>

#include "tenexp/errors.hpp"
#include "tenexp/linalg.hpp"

namespace tenexp {

void EnergyThresholds::validate() const {
  for (double tau : {tau_tucker, tau_fctn, tau_tf}) {
    if (!(tau > 0.0 && tau <= 1.0)) {
      throw ArgumentError("energy threshold " + std::to_string(tau) + " outside (0, 1]");
    }
  }
}

ErmResult erm(const Matrix& m, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ArgumentError("energy threshold " + std::to_string(tau) + " outside (0, 1]");
  }
  if (m.size() == 0 || (m.array() == 0.0).all()) {
    throw DegenerateInputError("rank estimation input has no nonzero entry");
  }
  const SvdResult s = svd(m);
  const Eigen::Index n = s.s.size();
  // Summing in the same order as the running sum lets the ratio reach 1 exactly.
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += s.s(i) * s.s(i);
  std::size_t rank = static_cast<std::size_t>(n);
  double running = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    running += s.s(i) * s.s(i);
    if (running / total >= tau) {
      rank = static_cast<std::size_t>(i) + 1;
      break;
    }
  }
  return ErmResult{rank, s.u.leftCols(static_cast<Eigen::Index>(rank))};
}

TuckerRankEstimate estimate_tucker_ranks(const DenseTensor& x, double tau) {
  if (x.order() < 3) throw ArgumentError("rank estimation requires order at least 3");
  TuckerRankEstimate out;
  for (std::size_t n = 1; n <= x.order(); ++n) {
    ErmResult r = erm(mode_n_unfold(x, n), tau);
    out.ranks.push_back(r.rank);
    out.bases.push_back(std::move(r.basis));
  }
  return out;
}

FctnRanks fctn_ranks_from_mode_ranks(const std::vector<std::size_t>& mode_ranks) {
  FctnRanks ranks(mode_ranks.size(), 1);
  for (std::size_t a = 0; a < mode_ranks.size(); ++a) {
    for (std::size_t b = a + 1; b < mode_ranks.size(); ++b) {
      ranks.set(a, b, std::min(mode_ranks[a], mode_ranks[b]));
    }
  }
  return ranks;
}

FctnRanks estimate_fctn_ranks(const DenseTensor& x, double tau) {
  return fctn_ranks_from_mode_ranks(estimate_tucker_ranks(x, tau).ranks);
}

TfRankEstimate estimate_tf_ranks(const DenseTensor& x, double tau) {
  if (x.order() != 3) throw ArgumentError("TF rank estimation requires a third-order tensor");
  ErmResult latent = erm(mode_n_unfold(x, 3), tau);
  const DenseTensor transformed = mode_n_product(x, latent.basis.transpose(), 3);
  std::size_t tubal = 1;
  for (std::size_t n = 1; n <= latent.rank; ++n) {
    tubal = std::max(tubal, erm(frontal_slice(transformed, n), tau).rank);
  }
  return TfRankEstimate{tubal, latent.rank, std::move(latent.basis)};
}

RankEstimate estimate_ranks(const DenseTensor& x, const EnergyThresholds& thresholds) {
  thresholds.validate();
  RankEstimate out;
  TuckerRankEstimate tucker = estimate_tucker_ranks(x, thresholds.tau_tucker);
  out.tucker_ranks = std::move(tucker.ranks);
  out.tucker_bases = std::move(tucker.bases);
  if (thresholds.tau_fctn == thresholds.tau_tucker) {
    out.fctn_ranks = fctn_ranks_from_mode_ranks(out.tucker_ranks);
  } else {
    out.fctn_ranks = estimate_fctn_ranks(x, thresholds.tau_fctn);
  }
  if (x.order() == 3) out.tf = estimate_tf_ranks(x, thresholds.tau_tf);
  return out;
}

}  // namespace tenexp
