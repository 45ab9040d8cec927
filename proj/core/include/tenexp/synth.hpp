#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/random.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp {

enum class SynthKind { tucker, fctn, tf, mixture };

std::string to_string(SynthKind kind);
SynthKind parse_synth_kind(const std::string& name);

struct SynthSpec {
  SynthKind kind = SynthKind::tucker;
  Shape shape;
  std::size_t rank = 3;         // Tucker ranks, FCTN edge ranks, TF tubal rank
  std::size_t latent_dim = 10;  // TF l
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  DenseTensor tensor;
  std::vector<CandidateDecomposition> components;
  std::vector<double> weights;  // mixture weights of the components
};

// Factor entries are N(0.5, 0.25^2) draws clipped to [0, 1].
SynthResult synth(const SynthSpec& spec);

// Factor generators shared by synth and recovery initialization. Each fills
// its containers in declaration order, row-major within a container.
TuckerFactors random_tucker(const Shape& shape, const std::vector<std::size_t>& ranks, Rng& rng,
                            double mean, double stddev, bool clip01);
FCTNFactors random_fctn(const Shape& shape, const FctnRanks& ranks, Rng& rng, double mean,
                        double stddev, bool clip01);
TFFactors random_tf(const Shape& shape, std::size_t tubal_rank, std::size_t latent_dim, Rng& rng,
                    double mean, double stddev, bool clip01);

}  // namespace tenexp
