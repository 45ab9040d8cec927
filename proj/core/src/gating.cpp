#include "tenexp/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tenexp/errors.hpp"
#include "tenexp/random.hpp"

namespace tenexp {

namespace {

void check_k(std::size_t k, std::size_t l) {
  if (l == 0) throw ArgumentError("gating needs at least one candidate");
  if (k < 1 || k > l) {
    throw ArgumentError("top-k value " + std::to_string(k) + " outside 1.." + std::to_string(l));
  }
}

void check_finite(std::span<const double> g) {
  for (double v : g) {
    if (!std::isfinite(v)) throw ArgumentError("gate scores must be finite");
  }
}

}  // namespace

void GateState::validate() const {
  check_k(k, scores.size());
  check_finite(scores);
  if (pinned_support) {
    if (pinned_support->size() != k) throw ArgumentError("pinned support size must equal k");
    for (auto i : *pinned_support) {
      if (i >= scores.size()) throw ArgumentError("pinned support index out of range");
    }
  }
}

GateWeights GateState::weights() const {
  validate();
  if (pinned_support) return gate_on_support(scores, *pinned_support);
  return top_k_gate(scores, k);
}

std::string to_string(SelectionStrategy s) { return s == SelectionStrategy::max ? "max" : "random"; }

SelectionStrategy parse_selection_strategy(const std::string& name) {
  if (name == "max") return SelectionStrategy::max;
  if (name == "random") return SelectionStrategy::random;
  throw ArgumentError("unknown selection strategy '" + name + "'");
}

std::vector<std::size_t> top_k_indices(std::span<const double> g, std::size_t k) {
  check_k(k, g.size());
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

GateWeights gate_on_support(std::span<const double> g, std::vector<std::size_t> support) {
  check_finite(g);
  check_k(support.size(), g.size());
  std::sort(support.begin(), support.end());
  if (std::adjacent_find(support.begin(), support.end()) != support.end()) {
    throw ArgumentError("gate support contains duplicates");
  }
  GateWeights w{std::vector<double>(g.size(), 0.0), std::move(support)};
  double peak = g[w.support.front()];
  for (auto i : w.support) peak = std::max(peak, g[i]);
  double total = 0.0;
  for (auto i : w.support) {
    w.lambdas[i] = std::exp(g[i] - peak);
    total += w.lambdas[i];
  }
  for (auto i : w.support) w.lambdas[i] /= total;
  return w;
}

GateWeights top_k_gate(std::span<const double> g, std::size_t k) {
  check_finite(g);
  return gate_on_support(g, top_k_indices(g, k));
}

std::vector<std::size_t> select_candidates(std::span<const double> g, std::size_t k,
                                           SelectionStrategy strategy, std::uint64_t seed) {
  check_k(k, g.size());
  check_finite(g);
  if (strategy == SelectionStrategy::max) return top_k_indices(g, k);

  // Sequential draws without replacement, each proportional to softmax(g)
  // over the candidates not yet chosen.
  const double peak = *std::max_element(g.begin(), g.end());
  std::vector<double> weight(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) weight[i] = std::exp(g[i] - peak);
  std::vector<bool> taken(g.size(), false);
  std::vector<std::size_t> chosen;
  Rng rng(seed);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!taken[i]) total += weight[i];
    }
    const double u = rng.uniform() * total;
    double running = 0.0;
    std::size_t pick = g.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (taken[i]) continue;
      pick = i;
      running += weight[i];
      if (u < running) break;
    }
    taken[pick] = true;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<double> gate_gradient(const GateWeights& w, std::span<const double> upstream) {
  if (upstream.size() != w.lambdas.size()) throw ArgumentError("upstream gradient length mismatch");
  // lambda_i * sum_j lambda_j (u_i - u_j) equals lambda_i (u_i - sum_j lambda_j u_j)
  // and vanishes exactly for constant upstream.
  std::vector<double> grad(w.lambdas.size(), 0.0);
  for (auto i : w.support) {
    double acc = 0.0;
    for (auto j : w.support) acc += w.lambdas[j] * (upstream[i] - upstream[j]);
    grad[i] = w.lambdas[i] * acc;
  }
  return grad;
}

std::vector<double> gate_gradient(std::span<const double> g, std::size_t k,
                                  std::span<const double> upstream) {
  return gate_gradient(top_k_gate(g, k), upstream);
}

}  // namespace tenexp
