#include <benchmark/benchmark.h>

#include "tenexp/decompositions.hpp"
#include "tenexp/optim.hpp"
#include "tenexp/random.hpp"
#include "tenexp/rank_estimation.hpp"
#include "tenexp/synth.hpp"

using namespace tenexp;

namespace {

DenseTensor random_tensor(const Shape& shape, Rng& rng) {
  DenseTensor t(shape);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

CandidateDecomposition candidate(DecompositionKind kind, std::size_t n, std::size_t rank, Rng& rng) {
  const Shape shape{n, n, n};
  switch (kind) {
    case DecompositionKind::tucker: {
      TuckerFactors f{random_tensor({rank, rank, rank}, rng), {}};
      for (int i = 0; i < 3; ++i) f.factors.push_back(random_matrix(n, rank, rng));
      return {f, shape};
    }
    case DecompositionKind::fctn: {
      FCTNFactors f{{}, FctnRanks(3, rank)};
      for (std::size_t i = 0; i < 3; ++i) f.cores.push_back(random_tensor(fctn_core_shape(f.ranks, shape, i), rng));
      return {f, shape};
    }
    case DecompositionKind::tf:
      return {TFFactors{random_tensor({n, rank, 10}, rng), random_tensor({rank, n, 10}, rng),
                        random_matrix(n, 10, rng)},
              shape};
  }
  return {};
}

void BM_Compose(benchmark::State& state, DecompositionKind kind) {
  Rng rng(1);
  const auto c = candidate(kind, static_cast<std::size_t>(state.range(0)), 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(compose(c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * state.range(0));
}

void BM_MixtureGradients(benchmark::State& state) {
  Rng rng(2);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  ParamSet p;
  for (auto kind : {DecompositionKind::tucker, DecompositionKind::fctn, DecompositionKind::tf})
    p.candidates.push_back(candidate(kind, n, 3, rng));
  p.gates = GateState{{0.1, 0.2, 0.3}, 3, std::nullopt};
  const DenseTensor observed = random_tensor({n, n, n}, rng);
  const DenseTensor mask = DenseTensor::filled({n, n, n}, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gradients(p, observed, mask, UpdateMask::everything(3)));
}

void BM_EstimateRanks(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const DenseTensor x = synth({SynthKind::tucker, {n, n, n}, 3, 10, 3}).tensor;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_ranks(x, EnergyThresholds::uniform(0.999)));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Compose, tucker, DecompositionKind::tucker)->Arg(20)->Arg(50);
BENCHMARK_CAPTURE(BM_Compose, fctn, DecompositionKind::fctn)->Arg(20)->Arg(50);
BENCHMARK_CAPTURE(BM_Compose, tf, DecompositionKind::tf)->Arg(20)->Arg(50);
BENCHMARK(BM_MixtureGradients)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateRanks)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
