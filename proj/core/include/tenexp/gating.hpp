#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tenexp {

struct GateWeights {
  std::vector<double> lambdas;       // length L, zero off the support
  std::vector<std::size_t> support;  // ascending candidate indices
};

struct GateState {
  std::vector<double> scores;
  std::size_t k = 1;
  // When set, the support is fixed to these indices instead of the top-k.
  std::optional<std::vector<std::size_t>> pinned_support;

  void validate() const;
  GateWeights weights() const;
};

enum class SelectionStrategy { max, random };

std::string to_string(SelectionStrategy s);
SelectionStrategy parse_selection_strategy(const std::string& name);

// Indices of the k largest scores, ties broken by lower index, ascending.
std::vector<std::size_t> top_k_indices(std::span<const double> g, std::size_t k);

// Softmax of g restricted to `support`; exact zeros elsewhere.
GateWeights gate_on_support(std::span<const double> g, std::vector<std::size_t> support);

GateWeights top_k_gate(std::span<const double> g, std::size_t k);

std::vector<std::size_t> select_candidates(std::span<const double> g, std::size_t k,
                                           SelectionStrategy strategy, std::uint64_t seed);

// Chain rule through the support softmax: upstream holds dLoss/dlambda.
std::vector<double> gate_gradient(const GateWeights& w, std::span<const double> upstream);
std::vector<double> gate_gradient(std::span<const double> g, std::size_t k,
                                  std::span<const double> upstream);

}  // namespace tenexp
