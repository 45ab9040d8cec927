#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tenexp/decompositions.hpp"
#include "tenexp/optim.hpp"
#include "tenexp/random.hpp"
#include "tenexp/tensor.hpp"

namespace tenexp::testing {

inline DenseTensor random_tensor(const Shape& shape, Rng& rng, double stddev = 1.0) {
  DenseTensor t(shape);
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
  return m;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Visits every multi-index of `shape` in row-major order.
template <typename Fn>
void for_each_index(const Shape& shape, Fn&& fn) {
  std::vector<std::size_t> idx(shape.size(), 0);
  const std::size_t total = element_count(shape);
  for (std::size_t count = 0; count < total; ++count) {
    fn(idx);
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
}

inline CandidateDecomposition random_candidate(DecompositionKind kind, const Shape& shape,
                                              std::size_t rank, std::size_t latent, Rng& rng) {
  switch (kind) {
    case DecompositionKind::tucker: {
      TuckerFactors f{random_tensor(Shape(shape.size(), rank), rng), {}};
      for (auto d : shape) f.factors.push_back(random_matrix(d, rank, rng));
      return {f, shape};
    }
    case DecompositionKind::fctn: {
      FCTNFactors f{{}, FctnRanks(shape.size(), rank)};
      for (std::size_t n = 0; n < shape.size(); ++n)
        f.cores.push_back(random_tensor(fctn_core_shape(f.ranks, shape, n), rng));
      return {f, shape};
    }
    case DecompositionKind::tf:
      return {TFFactors{random_tensor({shape[0], rank, latent}, rng),
                        random_tensor({rank, shape[1], latent}, rng),
                        random_matrix(shape[2], latent, rng)},
              shape};
  }
  return {};
}

// Largest relative error between analytic gradients and central differences
// over every selected parameter entry.
inline double max_fd_error(ParamSet params, const DenseTensor& observed, const DenseTensor& mask,
                           const UpdateMask& which, double h = 1e-5) {
  const GradientResult analytic = gradients(params, observed, mask, which);
  const auto grad_blocks = parameter_blocks(analytic.grad, which);
  auto blocks = parameter_blocks(params, which);
  double scale = 0.0;
  for (const auto& b : grad_blocks)
    for (double v : b) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t j = 0; j < blocks[b].size(); ++j) {
      const double saved = blocks[b][j];
      blocks[b][j] = saved + h;
      const double up = loss(params, observed, mask);
      blocks[b][j] = saved - h;
      const double down = loss(params, observed, mask);
      blocks[b][j] = saved;
      const double fd = (up - down) / (2 * h);
      const double a = grad_blocks[b][j];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-3 * scale, 1e-12});
      worst = std::max(worst, std::abs(a - fd) / denom);
    }
  }
  return worst;
}

}  // namespace tenexp::testing
