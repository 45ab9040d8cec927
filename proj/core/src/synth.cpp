#include "tenexp/synth.hpp"

#include <algorithm>
#include <string>

#include "tenexp/errors.hpp"

namespace tenexp {

namespace {

struct Sampler {
  Rng& rng;
  double mean;
  double stddev;
  bool clip01;

  double operator()() {
    const double v = rng.normal(mean, stddev);
    return clip01 ? std::clamp(v, 0.0, 1.0) : v;
  }
  void fill(std::span<double> s) {
    for (double& v : s) v = (*this)();
  }
  DenseTensor tensor(Shape shape) {
    DenseTensor t(std::move(shape));
    fill(t.data());
    return t;
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    fill({m.data(), static_cast<std::size_t>(m.size())});
    return m;
  }
};

}  // namespace

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::tucker: return "tucker";
    case SynthKind::fctn: return "fctn";
    case SynthKind::tf: return "tf";
    case SynthKind::mixture: return "mixture";
  }
  return "unknown";
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "tucker") return SynthKind::tucker;
  if (name == "fctn") return SynthKind::fctn;
  if (name == "tf") return SynthKind::tf;
  if (name == "mixture") return SynthKind::mixture;
  throw ArgumentError("unknown synthetic kind '" + name + "'");
}

void SynthSpec::validate() const {
  if (shape.empty()) throw ArgumentError("synthetic shape must not be empty");
  for (auto d : shape) {
    if (d == 0) throw ArgumentError("synthetic mode sizes must be positive");
  }
  if (rank == 0) throw ArgumentError("synthetic rank must be positive");
  if ((kind == SynthKind::tucker || kind == SynthKind::fctn) && shape.size() < 2) {
    throw ArgumentError("tucker and fctn synthetics need order at least 2");
  }
  if (kind == SynthKind::tf || kind == SynthKind::mixture) {
    if (shape.size() != 3) throw ArgumentError("tf and mixture synthetics must be third-order");
    if (latent_dim == 0 || latent_dim > shape[2]) {
      throw ArgumentError("TF latent dimension must lie in 1..I_3");
    }
  }
}

TuckerFactors random_tucker(const Shape& shape, const std::vector<std::size_t>& ranks, Rng& rng,
                            double mean, double stddev, bool clip01) {
  if (ranks.size() != shape.size()) throw ArgumentError("Tucker rank count must equal the order");
  Sampler draw{rng, mean, stddev, clip01};
  TuckerFactors f;
  f.core = draw.tensor(ranks);
  for (std::size_t n = 0; n < shape.size(); ++n) f.factors.push_back(draw.matrix(shape[n], ranks[n]));
  return f;
}

FCTNFactors random_fctn(const Shape& shape, const FctnRanks& ranks, Rng& rng, double mean,
                        double stddev, bool clip01) {
  if (ranks.order() != shape.size()) throw ArgumentError("FCTN rank table order must equal the order");
  Sampler draw{rng, mean, stddev, clip01};
  FCTNFactors f{{}, ranks};
  for (std::size_t n = 0; n < shape.size(); ++n) f.cores.push_back(draw.tensor(fctn_core_shape(ranks, shape, n)));
  return f;
}

TFFactors random_tf(const Shape& shape, std::size_t tubal_rank, std::size_t latent_dim, Rng& rng,
                    double mean, double stddev, bool clip01) {
  if (shape.size() != 3) throw ArgumentError("TF needs a third-order shape");
  Sampler draw{rng, mean, stddev, clip01};
  TFFactors f;
  f.a_hat = draw.tensor({shape[0], tubal_rank, latent_dim});
  f.b_hat = draw.tensor({tubal_rank, shape[1], latent_dim});
  f.transform = draw.matrix(shape[2], latent_dim);
  return f;
}

SynthResult synth(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  constexpr double mean = 0.5;
  constexpr double stddev = 0.25;
  const std::vector<std::size_t> tucker_ranks(spec.shape.size(), spec.rank);
  const FctnRanks fctn_ranks(spec.shape.size(), spec.rank);

  SynthResult out;
  if (spec.kind == SynthKind::tucker || spec.kind == SynthKind::mixture) {
    out.components.push_back({random_tucker(spec.shape, tucker_ranks, rng, mean, stddev, true), spec.shape});
  }
  if (spec.kind == SynthKind::fctn || spec.kind == SynthKind::mixture) {
    out.components.push_back({random_fctn(spec.shape, fctn_ranks, rng, mean, stddev, true), spec.shape});
  }
  if (spec.kind == SynthKind::tf || spec.kind == SynthKind::mixture) {
    out.components.push_back(
        {random_tf(spec.shape, spec.rank, spec.latent_dim, rng, mean, stddev, true), spec.shape});
  }

  out.weights.assign(out.components.size(), 1.0 / static_cast<double>(out.components.size()));
  out.tensor = DenseTensor(spec.shape);
  for (const auto& c : out.components) out.tensor = out.tensor + compose(c);
  if (out.components.size() > 1) {
    const double count = static_cast<double>(out.components.size());
    for (double& v : out.tensor.data()) v /= count;
  }
  return out;
}

}  // namespace tenexp
