#include "tenexp/recovery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "tenexp/errors.hpp"
#include "tenexp/linalg.hpp"
#include "tenexp/metrics.hpp"
#include "tenexp/random.hpp"
#include "tenexp/synth.hpp"

namespace tenexp {

namespace {

std::size_t unfolding_limit(const Shape& shape, std::size_t n) {
  return std::min(shape[n], element_count(shape) / shape[n]);
}

Matrix leading_left_vectors(const Matrix& m, std::size_t count) {
  const SvdResult s = svd(m);
  return s.u.leftCols(static_cast<Eigen::Index>(count));
}

struct Trainer {
  const DenseTensor& observed;
  const DenseTensor& mask;
  const RecoveryConfig& config;
  RecoveryReport& report;
  std::size_t iteration = 0;

  // Runs up to t_max iterations of `plan`; returns the iterations performed.
  std::size_t run(ParamSet& params, const UpdatePlan& plan, int phase) {
    std::vector<AdamState> states;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
      states.emplace_back(params, plan.group_is_gate[g] ? config.gate_adam : config.factor_adam);
    }
    std::vector<double> history;
    history.reserve(config.t_max);
    std::size_t t = 0;
    for (; t < config.t_max; ++t) {
      double iteration_loss = 0.0;
      for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        UpdateMask combined{std::vector<bool>(params.candidates.size(), false),
                            std::vector<bool>(params.candidates.size(), false)};
        for (auto g : plan.steps[s]) {
          for (std::size_t i = 0; i < combined.factors.size(); ++i) {
            combined.factors[i] = combined.factors[i] || plan.groups[g].factors[i];
            combined.gates[i] = combined.gates[i] || plan.groups[g].gates[i];
          }
        }
        const GradientResult gr = gradients(params, observed, mask, combined, config.threads);
        if (!std::isfinite(gr.loss)) {
          throw NumericalError("non-finite loss at iteration " + std::to_string(iteration + 1), iteration + 1);
        }
        if (s == 0) iteration_loss = gr.loss;
        for (auto g : plan.steps[s]) adam_step(states[g], params, gr.grad, plan.groups[g]);
      }
      ++iteration;
      history.push_back(iteration_loss);
      if (config.trace_every > 0 && (t % config.trace_every == 0)) {
        report.trace.push_back({iteration, phase, iteration_loss, params.gates.scores});
      }
      if (iteration_loss == 0.0) {
        ++t;
        break;
      }
      if (history.size() > config.stop_window) {
        const double before = history[history.size() - 1 - config.stop_window];
        if (std::abs(before - iteration_loss) <= config.stop_tolerance * before) {
          ++t;
          break;
        }
      }
    }
    return t;
  }
};

}  // namespace

std::string to_string(UpdatingOrder order) {
  switch (order) {
    case UpdatingOrder::I: return "I";
    case UpdatingOrder::II: return "II";
    case UpdatingOrder::III: return "III";
  }
  return "unknown";
}

UpdatingOrder parse_updating_order(const std::string& name) {
  if (name == "I" || name == "1") return UpdatingOrder::I;
  if (name == "II" || name == "2") return UpdatingOrder::II;
  if (name == "III" || name == "3") return UpdatingOrder::III;
  throw ArgumentError("unknown updating order '" + name + "'");
}

std::vector<DecompositionKind> RecoveryConfig::resolved_candidates(std::size_t order) const {
  if (!candidates.empty()) return candidates;
  if (order == 3) return {DecompositionKind::tucker, DecompositionKind::fctn, DecompositionKind::tf};
  return {DecompositionKind::tucker, DecompositionKind::fctn};
}

std::size_t RecoveryConfig::resolved_k(std::size_t order) const {
  return k == 0 ? resolved_candidates(order).size() : k;
}

void RecoveryConfig::validate(std::size_t order) const {
  if (order < 3) throw ArgumentError("recovery requires a tensor of order at least 3");
  thresholds.validate();
  factor_adam.validate();
  gate_adam.validate();
  const auto kinds = resolved_candidates(order);
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == DecompositionKind::tf && order != 3) {
      throw ArgumentError("TF candidates require third-order input");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (kinds[i] == kinds[j]) throw ArgumentError("candidate kinds must be distinct");
    }
  }
  const std::size_t kk = resolved_k(order);
  if (kk < 1 || kk > kinds.size()) {
    throw ArgumentError("k=" + std::to_string(kk) + " outside 1.." + std::to_string(kinds.size()));
  }
  if (t_max < 1) throw ArgumentError("t_max must be at least 1");
  if (!(init_stddev > 0.0)) throw ArgumentError("initialization standard deviation must be positive");
  if (!(stop_tolerance >= 0.0)) throw ArgumentError("stopping tolerance must be non-negative");
  if (uniform_ranks && (uniform_ranks->rank == 0 || uniform_ranks->latent_dim == 0)) {
    throw ArgumentError("uniform ranks must be positive");
  }
}

UpdatePlan updating_schedule(UpdatingOrder order, std::size_t candidates) {
  UpdatePlan plan;
  if (order == UpdatingOrder::III) {
    for (std::size_t i = 0; i < candidates; ++i) {
      plan.groups.push_back(UpdateMask::single_factor(candidates, i));
      plan.group_is_gate.push_back(false);
      plan.groups.push_back(UpdateMask::single_gate(candidates, i));
      plan.group_is_gate.push_back(true);
      plan.steps.push_back({2 * i});
      plan.steps.push_back({2 * i + 1});
    }
    return plan;
  }
  plan.groups = {UpdateMask::factors_only(candidates), UpdateMask::gates_only(candidates)};
  plan.group_is_gate = {false, true};
  if (order == UpdatingOrder::I) {
    plan.steps = {{0, 1}};
  } else {
    plan.steps = {{0}, {1}};
  }
  return plan;
}

UpdatePlan factor_schedule(UpdatingOrder order, std::size_t candidates,
                           const std::vector<std::size_t>& support) {
  UpdatePlan plan;
  if (order == UpdatingOrder::III) {
    for (auto i : support) {
      plan.groups.push_back(UpdateMask::single_factor(candidates, i));
      plan.group_is_gate.push_back(false);
      plan.steps.push_back({plan.groups.size() - 1});
    }
    return plan;
  }
  UpdateMask m{std::vector<bool>(candidates, false), std::vector<bool>(candidates, false)};
  for (auto i : support) m.factors.at(i) = true;
  plan.groups = {m};
  plan.group_is_gate = {false};
  plan.steps = {{0}};
  return plan;
}

DenseTensor mask_fill(const DenseTensor& observed, const DenseTensor& mask) {
  check_mask(mask, observed);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (mask[i] == 1.0) {
      sum += observed[i];
      ++count;
    }
  }
  if (count == 0) throw ArgumentError("mask has no observed entries");
  if (count == observed.size()) return observed;
  const double mean = sum / static_cast<double>(count);
  DenseTensor filled = observed;
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (mask[i] != 1.0) filled[i] = mean;
  }
  return filled;
}

RankEstimate resolve_ranks(const DenseTensor& filled, const RecoveryConfig& config) {
  if (!config.uniform_ranks) return estimate_ranks(filled, config.thresholds);

  const Shape& shape = filled.shape();
  const std::size_t order = shape.size();
  const std::size_t r = config.uniform_ranks->rank;
  RankEstimate out;
  for (std::size_t n = 0; n < order; ++n) {
    const std::size_t rn = std::min(r, unfolding_limit(shape, n));
    out.tucker_ranks.push_back(rn);
    out.tucker_bases.push_back(leading_left_vectors(mode_n_unfold(filled, n + 1), rn));
  }
  out.fctn_ranks = FctnRanks(order, r);
  if (order == 3) {
    const std::size_t l = std::min(config.uniform_ranks->latent_dim, unfolding_limit(shape, 2));
    out.tf = TfRankEstimate{r, l, leading_left_vectors(mode_n_unfold(filled, 3), l)};
  }
  return out;
}

CandidateDecomposition initialize_candidate(DecompositionKind kind, const DenseTensor& filled,
                                            const RankEstimate& ranks, Rng& rng, double stddev) {
  const Shape& shape = filled.shape();
  switch (kind) {
    case DecompositionKind::tucker: {
      TuckerFactors f;
      f.factors = ranks.tucker_bases;
      f.core = filled;
      for (std::size_t n = 0; n < shape.size(); ++n) {
        f.core = mode_n_product(f.core, f.factors[n].transpose(), n + 1);
      }
      return {std::move(f), shape};
    }
    case DecompositionKind::fctn:
      return {random_fctn(shape, ranks.fctn_ranks, rng, 0.0, stddev, false), shape};
    case DecompositionKind::tf: {
      if (!ranks.tf) throw ArgumentError("TF candidate needs TF rank estimates");
      TFFactors f = random_tf(shape, ranks.tf->tubal_rank, ranks.tf->latent_dim, rng, 0.0, stddev, false);
      f.transform = ranks.tf->transform_init;
      return {std::move(f), shape};
    }
  }
  throw ArgumentError("unknown candidate kind");
}

RecoveryReport recover(const DenseTensor& observed, const DenseTensor& mask,
                       const RecoveryConfig& config, const DenseTensor* truth) {
  const auto start = std::chrono::steady_clock::now();
  if (!observed.all_finite()) throw ArgumentError("observed tensor contains non-finite entries");
  config.validate(observed.order());
  const DenseTensor filled = mask_fill(observed, mask);
  const DenseTensor& reference = truth ? *truth : observed;
  if (reference.shape() != observed.shape()) throw ArgumentError("truth tensor shape differs from observed");

  const auto kinds = config.resolved_candidates(observed.order());
  const std::size_t count = kinds.size();
  const std::size_t k = config.resolved_k(observed.order());

  RecoveryReport report;
  report.ranks = resolve_ranks(filled, config);
  Rng rng(config.seed);

  ParamSet params;
  for (auto kind : kinds) {
    params.candidates.push_back(initialize_candidate(kind, filled, report.ranks, rng, config.init_stddev));
  }
  params.gates = GateState{std::vector<double>(count, 0.0), count, std::nullopt};

  Trainer trainer{observed, mask, config, report};
  report.phase1_iterations = trainer.run(params, updating_schedule(config.order, count), 1);
  report.phase1_scores = params.gates.scores;

  if (k < count) {
    const std::uint64_t selection_seed = rng();
    const auto support = select_candidates(params.gates.scores, k, config.strategy, selection_seed);
    if (!config.warm_start) {
      for (auto i : support) {
        params.candidates[i] =
            initialize_candidate(kinds[i], filled, report.ranks, rng, config.init_stddev);
      }
    }
    params.gates.k = k;
    params.gates.pinned_support = support;
    report.phase2_iterations = trainer.run(params, factor_schedule(config.order, count, support), 2);
    report.phase2_ran = true;
  }

  const Evaluation ev = evaluate(params, observed, mask);
  report.final_loss = ev.loss;
  report.weights = ev.weights;
  bool all_observed = true;
  for (double v : mask.data()) all_observed = all_observed && v == 1.0;
  report.recovered = ev.estimate;
  if (!all_observed) {
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (mask[i] == 1.0) report.recovered[i] = observed[i];
    }
  }
  if (!report.recovered.all_finite()) throw NumericalError("recovered tensor contains non-finite values");

  report.metrics.re = metric_re(reference, report.recovered);
  report.metrics.psnr = metric_psnr(reference, report.recovered);
  report.metrics.ssim = metric_ssim(reference, report.recovered);
  report.metrics.cr = metric_cr(params.candidates, report.weights, observed.size());
  for (std::size_t i = 0; i < count; ++i) {
    const DenseTensor e = ev.experts[i].shape() == observed.shape() ? ev.experts[i] : compose(params.candidates[i]);
    report.expert_re.push_back(metric_re(reference, e));
  }
  report.model = std::move(params);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RecoveryReport fit(const DenseTensor& x, const RecoveryConfig& config) {
  return recover(x, DenseTensor::filled(x.shape(), 1.0), config);
}

}  // namespace tenexp
