#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/gating.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

struct ParamSet {
  std::vector<CandidateDecomposition> candidates;
  GateState gates;

  void validate() const;
  Shape target_shape() const;
};

// Selects which parameter groups a gradient evaluation or Adam step touches.
struct UpdateMask {
  std::vector<bool> factors;  // one flag per candidate
  std::vector<bool> gates;    // one flag per gate score

  static UpdateMask everything(std::size_t candidates);
  static UpdateMask factors_only(std::size_t candidates);
  static UpdateMask gates_only(std::size_t candidates);
  static UpdateMask single_factor(std::size_t candidates, std::size_t i);
  static UpdateMask single_gate(std::size_t candidates, std::size_t i);

  bool any_gate() const;
};

struct Evaluation {
  GateWeights weights;
  std::vector<DenseTensor> experts;  // composed candidates; empty tensors off the support
  DenseTensor estimate;              // sum of lambda_i * E_i
  DenseTensor residual;              // mask * (estimate - observed)
  double loss = 0.0;
};

Evaluation evaluate(const ParamSet& params, const DenseTensor& observed, const DenseTensor& mask);
double loss(const ParamSet& params, const DenseTensor& observed, const DenseTensor& mask);

struct GradientResult {
  ParamSet grad;  // congruent to the parameters; unrequested blocks are zero
  double loss = 0.0;
};

GradientResult gradients(const ParamSet& params, const DenseTensor& observed,
                         const DenseTensor& mask, const UpdateMask& which,
                         std::size_t threads = 1);
GradientResult gradients(const ParamSet& params, const DenseTensor& observed,
                         const DenseTensor& mask, bool update_gates, std::size_t threads = 1);

ParamSet zeros_like(const ParamSet& params);

// Flat views of every parameter block selected by `which`, in a fixed order.
std::vector<std::span<double>> parameter_blocks(ParamSet& params, const UpdateMask& which);
std::vector<std::span<const double>> parameter_blocks(const ParamSet& params,
                                                      const UpdateMask& which);

struct AdamSettings {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  AdamState(const ParamSet& like, AdamSettings settings);

  AdamSettings settings;
  std::size_t step = 0;
  ParamSet first_moment;
  ParamSet second_moment;
};

// Bias-corrected Adam update of the blocks selected by `which`.
void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads, const UpdateMask& which);

void check_mask(const DenseTensor& mask, const DenseTensor& observed);

}  // namespace tenexp
