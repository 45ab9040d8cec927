#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/gating.hpp"
#include "tenexp/optim.hpp"
#include "tenexp/random.hpp"
#include "tenexp/rank_estimation.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

enum class UpdatingOrder { I, II, III };

std::string to_string(UpdatingOrder order);
UpdatingOrder parse_updating_order(const std::string& name);

// Replaces rank estimation by fixed ranks: every Tucker rank, FCTN edge and
// the TF tubal rank equal `rank`, the TF latent dimension equals
// `latent_dim`. Ranks are capped at what the unfoldings can support.
struct UniformRanks {
  std::size_t rank = 3;
  std::size_t latent_dim = 10;
};

struct RecoveryConfig {
  EnergyThresholds thresholds;
  std::size_t k = 0;  // 0 selects all candidates
  std::size_t t_max = 5000;
  UpdatingOrder order = UpdatingOrder::II;
  SelectionStrategy strategy = SelectionStrategy::max;
  std::uint64_t seed = 0;
  AdamSettings factor_adam;
  AdamSettings gate_adam;
  std::vector<DecompositionKind> candidates;  // empty selects the default set
  bool warm_start = false;
  std::size_t stop_window = 100;
  double stop_tolerance = 1e-9;
  double init_stddev = 0.1;
  std::optional<UniformRanks> uniform_ranks;
  std::size_t trace_every = 10;
  std::size_t threads = 1;

  std::vector<DecompositionKind> resolved_candidates(std::size_t order) const;
  std::size_t resolved_k(std::size_t order) const;
  void validate(std::size_t order) const;
};

// Parameter groups updated by one Adam state each, and the sub-steps of one
// iteration; every sub-step evaluates the gradient once and updates the
// listed groups from it.
struct UpdatePlan {
  std::vector<UpdateMask> groups;
  std::vector<bool> group_is_gate;
  std::vector<std::vector<std::size_t>> steps;
};

UpdatePlan updating_schedule(UpdatingOrder order, std::size_t candidates);

// Factor-only plan restricted to `support`.
UpdatePlan factor_schedule(UpdatingOrder order, std::size_t candidates,
                           const std::vector<std::size_t>& support);

struct TracePoint {
  std::size_t iteration = 0;  // counted across both phases
  int phase = 1;
  double loss = 0.0;
  std::vector<double> gate_scores;
};

struct RecoveryMetrics {
  double re = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double cr = 0.0;
};

struct RecoveryReport {
  DenseTensor recovered;
  RecoveryMetrics metrics;
  RankEstimate ranks;
  ParamSet model;
  GateWeights weights;
  std::vector<double> phase1_scores;
  std::vector<double> expert_re;  // per candidate, against the reference tensor
  std::vector<TracePoint> trace;
  std::size_t phase1_iterations = 0;
  std::size_t phase2_iterations = 0;
  bool phase2_ran = false;
  double final_loss = 0.0;
  double wall_time_seconds = 0.0;
};

// Observed entries outside the mask are ignored. Metrics compare the
// recovered tensor with `truth` when given, otherwise with `observed`.
RecoveryReport recover(const DenseTensor& observed, const DenseTensor& mask,
                       const RecoveryConfig& config, const DenseTensor* truth = nullptr);
RecoveryReport fit(const DenseTensor& x, const RecoveryConfig& config);

// Unobserved entries replaced by the mean of the observed ones.
DenseTensor mask_fill(const DenseTensor& observed, const DenseTensor& mask);

// Ranks used by the pipeline: energy-threshold estimates or the uniform override.
RankEstimate resolve_ranks(const DenseTensor& filled, const RecoveryConfig& config);

CandidateDecomposition initialize_candidate(DecompositionKind kind, const DenseTensor& filled,
                                            const RankEstimate& ranks, Rng& rng, double stddev);

}  // namespace tenexp
