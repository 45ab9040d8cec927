#include "tenexp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tenexp/errors.hpp"
#include "tenexp/linalg.hpp"

namespace tenexp {

namespace {

void check_congruent(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ArgumentError("metric inputs must have identical shapes");
}

struct SliceLayout {
  std::size_t rows;
  std::size_t cols;
  std::size_t count;
};

SliceLayout slice_layout(const DenseTensor& x) {
  if (x.order() < 2) throw ArgumentError("image metrics need at least two modes");
  return {x.shape()[0], x.shape()[1], x.size() / (x.shape()[0] * x.shape()[1])};
}

Matrix extract_slice(const DenseTensor& x, const SliceLayout& l, std::size_t s) {
  Matrix m(l.rows, l.cols);
  for (std::size_t i = 0; i < l.rows; ++i) {
    for (std::size_t j = 0; j < l.cols; ++j) m(i, j) = x[(i * l.cols + j) * l.count + s];
  }
  return m;
}

Vector gaussian_window(std::size_t size, double sigma) {
  Vector w(static_cast<Eigen::Index>(size));
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    w(static_cast<Eigen::Index>(i)) = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return w / w.sum();
}

// Separable "valid" correlation with window wr (vertical) and wc (horizontal).
Matrix filter_valid(const Matrix& m, const Vector& wr, const Vector& wc) {
  const Eigen::Index out_r = m.rows() - wr.size() + 1;
  const Eigen::Index out_c = m.cols() - wc.size() + 1;
  Matrix tmp = Matrix::Zero(m.rows(), out_c);
  for (Eigen::Index k = 0; k < wc.size(); ++k) tmp += wc(k) * m.middleCols(k, out_c);
  Matrix out = Matrix::Zero(out_r, out_c);
  for (Eigen::Index k = 0; k < wr.size(); ++k) out += wr(k) * tmp.middleRows(k, out_r);
  return out;
}

double slice_ssim(const Matrix& x, const Matrix& y) {
  constexpr double k1 = 0.01;
  constexpr double k2 = 0.03;
  constexpr double c1 = k1 * k1;
  constexpr double c2 = k2 * k2;
  const Vector wr = gaussian_window(std::min<std::size_t>(11, static_cast<std::size_t>(x.rows())), 1.5);
  const Vector wc = gaussian_window(std::min<std::size_t>(11, static_cast<std::size_t>(x.cols())), 1.5);
  const Matrix mx = filter_valid(x, wr, wc);
  const Matrix my = filter_valid(y, wr, wc);
  const Matrix sxx = filter_valid(x.cwiseProduct(x), wr, wc) - mx.cwiseProduct(mx);
  const Matrix syy = filter_valid(y.cwiseProduct(y), wr, wc) - my.cwiseProduct(my);
  const Matrix sxy = filter_valid(x.cwiseProduct(y), wr, wc) - mx.cwiseProduct(my);
  const auto num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const auto den = (mx.array().square() + my.array().square() + c1) * (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

double tail_energy(const Vector& s, std::size_t from, std::size_t to) {
  double sum = 0.0;
  for (std::size_t i = from; i < to; ++i) sum += s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));
  return sum;
}

struct Spectrum {
  Vector s;
  std::size_t rank;
};

Spectrum spectrum(const Matrix& m) {
  Vector s = singular_values(m);
  const std::size_t r = numerical_rank(s, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  return {std::move(s), r};
}

[[noreturn]] void violated(const std::string& assumption) {
  throw ArgumentError("error bound assumption violated: " + assumption);
}

}  // namespace

double metric_re(const DenseTensor& truth, const DenseTensor& estimate) {
  check_congruent(truth, estimate);
  const double denom = frobenius_norm(truth);
  if (denom == 0.0) throw DegenerateInputError("relative error is undefined for a zero truth tensor");
  return frobenius_norm(truth - estimate) / denom;
}

double metric_cr(const std::vector<CandidateDecomposition>& candidates, const GateWeights& lambdas,
                 std::size_t target_elements) {
  if (target_elements == 0) throw ArgumentError("target element count must be positive");
  if (lambdas.lambdas.size() != candidates.size()) throw ArgumentError("gate weights do not match candidates");
  std::size_t stored = lambdas.support.size();
  for (auto i : lambdas.support) stored += param_count(candidates.at(i));
  return 100.0 * static_cast<double>(stored) / static_cast<double>(target_elements);
}

double metric_psnr(const DenseTensor& truth, const DenseTensor& estimate) {
  check_congruent(truth, estimate);
  const SliceLayout l = slice_layout(truth);
  double total = 0.0;
  const double pixels = static_cast<double>(l.rows * l.cols);
  for (std::size_t s = 0; s < l.count; ++s) {
    double se = 0.0;
    for (std::size_t p = 0; p < l.rows * l.cols; ++p) {
      const double d = truth[p * l.count + s] - estimate[p * l.count + s];
      se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    total += 10.0 * std::log10(pixels / se);
  }
  return total / static_cast<double>(l.count);
}

double metric_ssim(const DenseTensor& truth, const DenseTensor& estimate) {
  check_congruent(truth, estimate);
  const SliceLayout l = slice_layout(truth);
  double total = 0.0;
  for (std::size_t s = 0; s < l.count; ++s) {
    total += slice_ssim(extract_slice(truth, l, s), extract_slice(estimate, l, s));
  }
  return total / static_cast<double>(l.count);
}

double error_bound_rhs(const DenseTensor& x, const RankEstimate& ranks, const GateWeights& lambdas) {
  if (x.order() != 3) throw ArgumentError("error bound is defined for third-order tensors");
  if (lambdas.lambdas.size() != 3) throw ArgumentError("error bound needs three gate weights");
  if (ranks.tucker_ranks.size() != 3 || ranks.fctn_ranks.order() != 3 || !ranks.tf) {
    throw ArgumentError("error bound needs Tucker, FCTN and TF ranks of a third-order tensor");
  }

  std::vector<Spectrum> modes;
  for (std::size_t n = 1; n <= 3; ++n) modes.push_back(spectrum(mode_n_unfold(x, n)));

  double tucker = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    if (ranks.tucker_ranks[n] > modes[n].rank) violated("R_" + std::to_string(n + 1) + " <= rank(X_<n>)");
    tucker += tail_energy(modes[n].s, ranks.tucker_ranks[n], modes[n].rank);
  }

  double fctn = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      const std::size_t r = ranks.fctn_ranks.get(a, b);
      // The unfolding with the smaller rank; ties use the lower mode.
      const Spectrum& m = modes[b].rank < modes[a].rank ? modes[b] : modes[a];
      if (r > m.rank) {
        violated("R_{" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "} <= min unfolding rank");
      }
      fctn += tail_energy(m.s, r, m.rank);
    }
  }

  const TfRankEstimate& tf = *ranks.tf;
  if (static_cast<std::size_t>(tf.transform_init.rows()) != x.shape()[2] ||
      static_cast<std::size_t>(tf.transform_init.cols()) != tf.latent_dim) {
    throw ArgumentError("TF transform must be I_3 x l");
  }
  if (tf.latent_dim > modes[2].rank) violated("l <= rank(X_<3>)");
  const DenseTensor transformed = mode_n_product(x, tf.transform_init.transpose(), 3);
  double tf_sum = tail_energy(modes[2].s, tf.latent_dim, modes[2].rank);
  for (std::size_t n = 1; n <= tf.latent_dim; ++n) {
    const Spectrum slice = spectrum(frontal_slice(transformed, n));
    if (tf.tubal_rank > slice.rank) violated("R <= rank of transformed frontal slice " + std::to_string(n));
    tf_sum += tail_energy(slice.s, tf.tubal_rank, slice.rank);
  }

  const auto& w = lambdas.lambdas;
  return w[0] * w[0] * tucker + w[1] * w[1] * fctn + w[2] * w[2] * tf_sum;
}

}  // namespace tenexp
