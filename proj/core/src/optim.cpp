#include "tenexp/optim.hpp"

#include <cmath>
#include <string>
#include <thread>
#include <type_traits>

#include "tenexp/errors.hpp"

namespace tenexp {

namespace {

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> span_of(DenseTensor& t) { return t.data(); }
std::span<const double> span_of(const DenseTensor& t) { return t.data(); }

template <typename Factors, typename Fn>
void for_each_block(Factors& factors, Fn&& fn) {
  std::visit(
      [&](auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          fn(span_of(f.core));
          for (auto& h : f.factors) fn(span_of(h));
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          for (auto& g : f.cores) fn(span_of(g));
        } else {
          fn(span_of(f.a_hat));
          fn(span_of(f.b_hat));
          fn(span_of(f.transform));
        }
      },
      factors);
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(threads, count);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::size_t> all_but(std::size_t skip, std::size_t order) {
  std::vector<std::size_t> modes;
  for (std::size_t m = 1; m <= order; ++m) {
    if (m != skip) modes.push_back(m);
  }
  return modes;
}

Matrix tensor_to_matrix(const DenseTensor& t) {
  return t.as_matrix(t.shape()[0], t.size() / t.shape()[0]);
}

TuckerFactors tucker_gradient(const TuckerFactors& f, const DenseTensor& upstream) {
  const std::size_t order = f.factors.size();
  TuckerFactors g;
  DenseTensor dc = upstream;
  for (std::size_t n = 0; n < order; ++n) dc = mode_n_product(dc, f.factors[n].transpose(), n + 1);
  g.core = std::move(dc);
  for (std::size_t n = 0; n < order; ++n) {
    DenseTensor partial = f.core;
    for (std::size_t m = 0; m < order; ++m) {
      if (m != n) partial = mode_n_product(partial, f.factors[m], m + 1);
    }
    const auto modes = all_but(n + 1, order);
    g.factors.push_back(tensor_to_matrix(tensor_contraction(upstream, partial, modes, modes)));
  }
  return g;
}

FCTNFactors fctn_gradient(const FCTNFactors& f, const DenseTensor& upstream) {
  const std::size_t order = f.cores.size();
  FCTNFactors g{{}, f.ranks};
  for (std::size_t n = 0; n < order; ++n) {
    const DenseTensor rest = fctn_contract_except(f, n);
    std::vector<std::size_t> rest_modes;
    for (std::size_t m = 1; m < order; ++m) rest_modes.push_back(m);
    const DenseTensor raw =
        tensor_contraction(rest, upstream, rest_modes, all_but(n + 1, order));
    // raw modes: edges (n, m) for m != n ascending, then the physical mode.
    std::vector<std::size_t> perm;
    for (std::size_t m = 1; m <= n; ++m) perm.push_back(m);
    perm.push_back(order);
    for (std::size_t m = n + 1; m < order; ++m) perm.push_back(m);
    g.cores.push_back(permute(raw, perm));
  }
  return g;
}

TFFactors tf_gradient(const TFFactors& f, const DenseTensor& upstream) {
  const DenseTensor p = facewise_product(f.a_hat, f.b_hat);
  const std::size_t front[] = {1, 2};
  const std::size_t swap_perm[] = {2, 1, 3};
  TFFactors g;
  g.transform = tensor_to_matrix(tensor_contraction(upstream, p, front, front));
  const DenseTensor dp = mode_n_product(upstream, f.transform.transpose(), 3);
  g.a_hat = facewise_product(dp, permute(f.b_hat, swap_perm));
  g.b_hat = facewise_product(permute(f.a_hat, swap_perm), dp);
  return g;
}

CandidateFactors candidate_gradient(const CandidateFactors& factors, const DenseTensor& upstream) {
  return std::visit(
      [&](const auto& f) -> CandidateFactors {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          return tucker_gradient(f, upstream);
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          return fctn_gradient(f, upstream);
        } else {
          return tf_gradient(f, upstream);
        }
      },
      factors);
}

void check_same_count(const UpdateMask& which, std::size_t candidates) {
  if (which.factors.size() != candidates || which.gates.size() != candidates) {
    throw ArgumentError("update mask does not match the candidate count");
  }
}

}  // namespace

void ParamSet::validate() const {
  if (candidates.empty()) throw ArgumentError("parameter set has no candidates");
  if (gates.scores.size() != candidates.size()) {
    throw ArgumentError("gate score count must equal candidate count");
  }
  gates.validate();
  for (const auto& c : candidates) {
    tenexp::validate(c);
    if (c.target_shape != candidates.front().target_shape) {
      throw ArgumentError("candidates must share one target shape");
    }
  }
}

Shape ParamSet::target_shape() const {
  if (candidates.empty()) throw ArgumentError("parameter set has no candidates");
  return candidates.front().target_shape;
}

UpdateMask UpdateMask::everything(std::size_t candidates) {
  return {std::vector<bool>(candidates, true), std::vector<bool>(candidates, true)};
}

UpdateMask UpdateMask::factors_only(std::size_t candidates) {
  return {std::vector<bool>(candidates, true), std::vector<bool>(candidates, false)};
}

UpdateMask UpdateMask::gates_only(std::size_t candidates) {
  return {std::vector<bool>(candidates, false), std::vector<bool>(candidates, true)};
}

UpdateMask UpdateMask::single_factor(std::size_t candidates, std::size_t i) {
  UpdateMask m{std::vector<bool>(candidates, false), std::vector<bool>(candidates, false)};
  m.factors.at(i) = true;
  return m;
}

UpdateMask UpdateMask::single_gate(std::size_t candidates, std::size_t i) {
  UpdateMask m{std::vector<bool>(candidates, false), std::vector<bool>(candidates, false)};
  m.gates.at(i) = true;
  return m;
}

bool UpdateMask::any_gate() const {
  for (bool b : gates) {
    if (b) return true;
  }
  return false;
}

void check_mask(const DenseTensor& mask, const DenseTensor& observed) {
  if (mask.shape() != observed.shape()) throw ArgumentError("mask and observed shapes differ");
  for (double v : mask.data()) {
    if (v != 0.0 && v != 1.0) throw ArgumentError("mask entries must be 0 or 1");
  }
}

Evaluation evaluate(const ParamSet& params, const DenseTensor& observed, const DenseTensor& mask) {
  params.validate();
  check_mask(mask, observed);
  if (params.target_shape() != observed.shape()) {
    throw ArgumentError("candidate target shape differs from the observed tensor");
  }
  Evaluation ev;
  ev.weights = params.gates.weights();
  ev.experts.resize(params.candidates.size());
  ev.estimate = DenseTensor(observed.shape());
  for (auto i : ev.weights.support) {
    ev.experts[i] = compose(params.candidates[i]);
    const double lambda = ev.weights.lambdas[i];
    auto est = ev.estimate.data();
    const auto e = ev.experts[i].data();
    for (std::size_t j = 0; j < est.size(); ++j) est[j] += lambda * e[j];
  }
  ev.residual = DenseTensor(observed.shape());
  double total = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    const double r = mask[j] * (ev.estimate[j] - observed[j]);
    ev.residual[j] = r;
    total += r * r;
  }
  ev.loss = total;
  return ev;
}

double loss(const ParamSet& params, const DenseTensor& observed, const DenseTensor& mask) {
  return evaluate(params, observed, mask).loss;
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet z = params;
  for (auto& c : z.candidates) {
    for_each_block(c.factors, [](std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
  }
  std::fill(z.gates.scores.begin(), z.gates.scores.end(), 0.0);
  return z;
}

GradientResult gradients(const ParamSet& params, const DenseTensor& observed,
                         const DenseTensor& mask, const UpdateMask& which, std::size_t threads) {
  check_same_count(which, params.candidates.size());
  const Evaluation ev = evaluate(params, observed, mask);
  GradientResult out{zeros_like(params), ev.loss};
  const std::size_t count = params.candidates.size();

  // dLoss/dEstimate = 2 * residual (mask is binary).
  parallel_for(count, threads, [&](std::size_t i) {
    if (!which.factors[i] || ev.weights.lambdas[i] == 0.0) return;
    const DenseTensor upstream = (2.0 * ev.weights.lambdas[i]) * ev.residual;
    out.grad.candidates[i].factors = candidate_gradient(params.candidates[i].factors, upstream);
  });

  if (which.any_gate()) {
    std::vector<double> d_lambda(count, 0.0);
    for (auto i : ev.weights.support) d_lambda[i] = 2.0 * inner_product(ev.residual, ev.experts[i]);
    const auto d_scores = gate_gradient(ev.weights, d_lambda);
    for (std::size_t i = 0; i < count; ++i) {
      if (which.gates[i]) out.grad.gates.scores[i] = d_scores[i];
    }
  }
  return out;
}

GradientResult gradients(const ParamSet& params, const DenseTensor& observed,
                         const DenseTensor& mask, bool update_gates, std::size_t threads) {
  const std::size_t count = params.candidates.size();
  return gradients(params, observed, mask,
                   update_gates ? UpdateMask::everything(count) : UpdateMask::factors_only(count),
                   threads);
}

namespace {

template <typename Params, typename Span>
std::vector<Span> collect_blocks(Params& params, const UpdateMask& which) {
  check_same_count(which, params.candidates.size());
  std::vector<Span> blocks;
  for (std::size_t i = 0; i < params.candidates.size(); ++i) {
    if (which.factors[i]) {
      for_each_block(params.candidates[i].factors, [&](Span s) { blocks.push_back(s); });
    }
  }
  for (std::size_t i = 0; i < params.gates.scores.size(); ++i) {
    if (which.gates[i]) blocks.emplace_back(&params.gates.scores[i], 1);
  }
  return blocks;
}

}  // namespace

std::vector<std::span<double>> parameter_blocks(ParamSet& params, const UpdateMask& which) {
  return collect_blocks<ParamSet, std::span<double>>(params, which);
}

std::vector<std::span<const double>> parameter_blocks(const ParamSet& params,
                                                      const UpdateMask& which) {
  return collect_blocks<const ParamSet, std::span<const double>>(params, which);
}

void AdamSettings::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("Adam epsilon must be positive");
}

AdamState::AdamState(const ParamSet& like, AdamSettings s)
    : settings(s), first_moment(zeros_like(like)), second_moment(zeros_like(like)) {
  settings.validate();
}

void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads, const UpdateMask& which) {
  auto p = parameter_blocks(params, which);
  auto g = parameter_blocks(grads, which);
  auto m = parameter_blocks(state.first_moment, which);
  auto v = parameter_blocks(state.second_moment, which);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ArgumentError("Adam buffers are not congruent with the parameters");
  }
  ++state.step;
  const auto& s = state.settings;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (g[b].size() != p[b].size() || m[b].size() != p[b].size() || v[b].size() != p[b].size()) {
      throw ArgumentError("Adam buffers are not congruent with the parameters");
    }
    for (std::size_t j = 0; j < p[b].size(); ++j) {
      const double gj = g[b][j];
      m[b][j] = s.beta1 * m[b][j] + (1.0 - s.beta1) * gj;
      v[b][j] = s.beta2 * v[b][j] + (1.0 - s.beta2) * gj * gj;
      const double m_hat = m[b][j] / c1;
      const double v_hat = v[b][j] / c2;
      p[b][j] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }
}

}  // namespace tenexp
