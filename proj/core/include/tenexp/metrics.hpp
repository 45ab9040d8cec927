#pragma once

#include <cstddef>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/gating.hpp"
#include "tenexp/rank_estimation.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

// ||truth - estimate||_F / ||truth||_F
double metric_re(const DenseTensor& truth, const DenseTensor& estimate);

// Stored parameters of the supported candidates plus k gate weights, as a
// percentage of target_elements.
double metric_cr(const std::vector<CandidateDecomposition>& candidates, const GateWeights& lambdas,
                 std::size_t target_elements);

// Images are spanned by the first two modes; every combination of the
// remaining modes is one slice. Both metrics average over slices and assume
// a dynamic range of 1. PSNR is +infinity when some slice matches exactly.
double metric_psnr(const DenseTensor& truth, const DenseTensor& estimate);
double metric_ssim(const DenseTensor& truth, const DenseTensor& estimate);

// Right-hand side of the mixture approximation error bound for a third-order
// tensor. lambdas are ordered (Tucker, FCTN, TF); ranks.tf must be present.
double error_bound_rhs(const DenseTensor& x, const RankEstimate& ranks, const GateWeights& lambdas);

}  // namespace tenexp
