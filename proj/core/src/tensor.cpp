#include "tenexp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "tenexp/errors.hpp"

namespace tenexp {

namespace {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ArgumentError("tensor shape must have at least one mode");
  for (auto d : shape) {
    if (d == 0) throw ArgumentError("tensor mode sizes must be positive, got " + shape_string(shape));
  }
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// perm is 0-based here.
DenseTensor permute0(const DenseTensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t n = x.order();
  bool identity = true;
  for (std::size_t i = 0; i < n; ++i) identity = identity && perm[i] == i;
  if (identity) return x;

  Shape out_shape(n);
  for (std::size_t i = 0; i < n; ++i) out_shape[i] = x.shape()[perm[i]];
  const auto in_strides = strides_of(x.shape());
  std::vector<std::size_t> step(n);
  for (std::size_t i = 0; i < n; ++i) step[i] = in_strides[perm[i]];

  std::vector<double> out(x.size());
  std::vector<std::size_t> counter(n, 0);
  const std::size_t inner = out_shape[n - 1];
  const std::size_t inner_step = step[n - 1];
  const double* src = x.data().data();
  std::size_t offset = 0;
  for (std::size_t pos = 0; pos < out.size(); pos += inner) {
    const double* p = src + offset;
    for (std::size_t j = 0; j < inner; ++j) out[pos + j] = p[j * inner_step];
    for (std::size_t d = n - 1; d-- > 0;) {
      offset += step[d];
      if (++counter[d] < out_shape[d]) break;
      offset -= step[d] * out_shape[d];
      counter[d] = 0;
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

std::vector<std::size_t> to_zero_based_perm(std::span<const std::size_t> perm, std::size_t order) {
  if (perm.size() != order) {
    throw ArgumentError("permutation length " + std::to_string(perm.size()) +
                        " does not match tensor order " + std::to_string(order));
  }
  std::vector<std::size_t> out(order);
  std::vector<bool> seen(order, false);
  for (std::size_t i = 0; i < order; ++i) {
    if (perm[i] < 1 || perm[i] > order || seen[perm[i] - 1]) {
      throw ArgumentError("invalid permutation entry " + std::to_string(perm[i]));
    }
    seen[perm[i] - 1] = true;
    out[i] = perm[i] - 1;
  }
  return out;
}

std::vector<std::size_t> inverse_perm(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

std::vector<std::size_t> mode_n_perm(std::size_t n, std::size_t order) {
  std::vector<std::size_t> perm{n};
  for (std::size_t m = 1; m <= order; ++m) {
    if (m != n) perm.push_back(m);
  }
  return perm;
}

void check_mode(std::size_t n, std::size_t order) {
  if (n < 1 || n > order) {
    throw ArgumentError("mode index " + std::to_string(n) + " out of range 1.." +
                        std::to_string(order));
  }
}

void check_same_shape(const DenseTensor& a, const DenseTensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ArgumentError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                        " vs " + shape_string(b.shape()));
  }
}

using RowMap = Eigen::Map<const Matrix>;
using MutRowMap = Eigen::Map<Matrix>;

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor() : shape_{1}, data_(1, 0.0) {}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ArgumentError("data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_string(shape_));
  }
}

DenseTensor DenseTensor::filled(Shape shape, double value) {
  DenseTensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  return DenseTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                     std::vector<double>(m.data(), m.data() + m.size()));
}

std::size_t DenseTensor::dim(std::size_t mode) const {
  check_mode(mode, order());
  return shape_[mode - 1];
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ArgumentError("index arity does not match tensor order");
  std::size_t linear = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (index[i] >= shape_[i]) throw ArgumentError("index out of range");
    linear = linear * shape_[i] + index[i];
  }
  return linear;
}

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[linear_index(std::span(index.begin(), index.size()))];
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return data_[linear_index(std::span(index.begin(), index.size()))];
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[linear_index(index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }

DenseTensor DenseTensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ArgumentError("cannot reshape " + shape_string(shape_) + " into " + shape_string(shape));
  }
  return DenseTensor(std::move(shape), data_);
}

Matrix DenseTensor::as_matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) throw ArgumentError("matrix view size mismatch");
  return RowMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm) {
  return permute0(x, to_zero_based_perm(perm, x.order()));
}

Matrix generalized_unfold(const DenseTensor& x, std::span<const std::size_t> perm, std::size_t q) {
  const auto p = to_zero_based_perm(perm, x.order());
  if (q < 1 || q >= x.order()) {
    throw ArgumentError("unfolding split q=" + std::to_string(q) + " out of range 1.." +
                        std::to_string(x.order() - 1));
  }
  std::size_t rows = 1;
  for (std::size_t i = 0; i < q; ++i) rows *= x.shape()[p[i]];
  const DenseTensor y = permute0(x, p);
  return y.as_matrix(rows, y.size() / rows);
}

DenseTensor generalized_fold(const Matrix& m, std::span<const std::size_t> perm, std::size_t q,
                             const Shape& shape) {
  validate_shape(shape);
  const auto p = to_zero_based_perm(perm, shape.size());
  if (q < 1 || q >= shape.size()) throw ArgumentError("fold split q out of range");
  Shape permuted(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) permuted[i] = shape[p[i]];
  std::size_t rows = 1;
  for (std::size_t i = 0; i < q; ++i) rows *= permuted[i];
  if (static_cast<std::size_t>(m.rows()) != rows ||
      static_cast<std::size_t>(m.rows() * m.cols()) != element_count(shape)) {
    throw ArgumentError("matrix of size " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " cannot fold into " + shape_string(shape));
  }
  DenseTensor y(permuted, std::vector<double>(m.data(), m.data() + m.size()));
  return permute0(y, inverse_perm(p));
}

Matrix mode_n_unfold(const DenseTensor& x, std::size_t n) {
  check_mode(n, x.order());
  if (x.order() == 1) return x.as_matrix(x.size(), 1);
  const auto perm = mode_n_perm(n, x.order());
  return generalized_unfold(x, perm, 1);
}

DenseTensor mode_n_fold(const Matrix& m, std::size_t n, const Shape& shape) {
  check_mode(n, shape.size());
  if (shape.size() == 1) {
    if (static_cast<std::size_t>(m.size()) != shape[0]) throw ArgumentError("fold size mismatch");
    return DenseTensor(shape, std::vector<double>(m.data(), m.data() + m.size()));
  }
  const auto perm = mode_n_perm(n, shape.size());
  return generalized_fold(m, perm, 1, shape);
}

DenseTensor mode_n_product(const DenseTensor& x, const Matrix& a, std::size_t n) {
  check_mode(n, x.order());
  const std::size_t in = x.shape()[n - 1];
  if (static_cast<std::size_t>(a.cols()) != in) {
    throw ArgumentError("mode-" + std::to_string(n) + " product: matrix has " +
                        std::to_string(a.cols()) + " columns but mode size is " +
                        std::to_string(in));
  }
  const std::size_t out_n = static_cast<std::size_t>(a.rows());
  std::size_t before = 1;
  std::size_t after = 1;
  for (std::size_t i = 0; i < n - 1; ++i) before *= x.shape()[i];
  for (std::size_t i = n; i < x.order(); ++i) after *= x.shape()[i];

  Shape out_shape = x.shape();
  out_shape[n - 1] = out_n;
  DenseTensor y(out_shape);
  const auto rows_in = static_cast<Eigen::Index>(in);
  const auto rows_out = static_cast<Eigen::Index>(out_n);
  const auto cols = static_cast<Eigen::Index>(after);
  for (std::size_t p = 0; p < before; ++p) {
    RowMap xs(x.data().data() + p * in * after, rows_in, cols);
    MutRowMap ys(y.data().data() + p * out_n * after, rows_out, cols);
    ys.noalias() = a * xs;
  }
  return y;
}

DenseTensor tensor_contraction(const DenseTensor& a, const DenseTensor& b,
                               std::span<const std::size_t> modes_a,
                               std::span<const std::size_t> modes_b) {
  if (modes_a.empty() || modes_a.size() != modes_b.size()) {
    throw ArgumentError("contraction requires equally many (at least one) paired modes");
  }
  std::vector<bool> used_a(a.order(), false);
  std::vector<bool> used_b(b.order(), false);
  std::size_t inner = 1;
  for (std::size_t i = 0; i < modes_a.size(); ++i) {
    check_mode(modes_a[i], a.order());
    check_mode(modes_b[i], b.order());
    const std::size_t ma = modes_a[i] - 1;
    const std::size_t mb = modes_b[i] - 1;
    if (used_a[ma] || used_b[mb]) throw ArgumentError("contraction mode lists contain duplicates");
    used_a[ma] = used_b[mb] = true;
    if (a.shape()[ma] != b.shape()[mb]) {
      throw ArgumentError("contraction size mismatch: mode " + std::to_string(modes_a[i]) +
                          " of a has size " + std::to_string(a.shape()[ma]) + ", mode " +
                          std::to_string(modes_b[i]) + " of b has size " +
                          std::to_string(b.shape()[mb]));
    }
    inner *= a.shape()[ma];
  }

  std::vector<std::size_t> perm_a;
  std::vector<std::size_t> perm_b;
  Shape out_shape;
  for (std::size_t m = 0; m < a.order(); ++m) {
    if (!used_a[m]) {
      perm_a.push_back(m);
      out_shape.push_back(a.shape()[m]);
    }
  }
  for (auto m : modes_a) perm_a.push_back(m - 1);
  for (auto m : modes_b) perm_b.push_back(m - 1);
  for (std::size_t m = 0; m < b.order(); ++m) {
    if (!used_b[m]) {
      perm_b.push_back(m);
      out_shape.push_back(b.shape()[m]);
    }
  }
  const std::size_t free_a = a.size() / inner;
  const std::size_t free_b = b.size() / inner;
  const DenseTensor pa = permute0(a, perm_a);
  const DenseTensor pb = permute0(b, perm_b);
  if (out_shape.empty()) out_shape = {1};

  DenseTensor out(out_shape);
  RowMap ma(pa.data().data(), static_cast<Eigen::Index>(free_a), static_cast<Eigen::Index>(inner));
  RowMap mb(pb.data().data(), static_cast<Eigen::Index>(inner), static_cast<Eigen::Index>(free_b));
  MutRowMap mo(out.data().data(), static_cast<Eigen::Index>(free_a),
               static_cast<Eigen::Index>(free_b));
  mo.noalias() = ma * mb;
  return out;
}

Matrix frontal_slice(const DenseTensor& x, std::size_t n) {
  if (x.order() != 3) throw ArgumentError("frontal slices require a third-order tensor");
  check_mode(n, x.shape()[2]);
  const std::size_t rows = x.shape()[0];
  const std::size_t cols = x.shape()[1];
  const std::size_t depth = x.shape()[2];
  Matrix s(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) s(i, j) = x[(i * cols + j) * depth + (n - 1)];
  }
  return s;
}

DenseTensor facewise_product(const DenseTensor& a, const DenseTensor& b) {
  if (a.order() != 3 || b.order() != 3) throw ArgumentError("face-wise product requires third-order tensors");
  const std::size_t i1 = a.shape()[0];
  const std::size_t r = a.shape()[1];
  const std::size_t l = a.shape()[2];
  const std::size_t i2 = b.shape()[1];
  if (b.shape()[0] != r) throw ArgumentError("face-wise product: inner dimension mismatch");
  if (b.shape()[2] != l) throw ArgumentError("face-wise product: slice count mismatch");

  // Bring slices to the leading mode so each one is a contiguous matrix.
  const DenseTensor as = permute0(a, {2, 0, 1});
  const DenseTensor bs = permute0(b, {2, 0, 1});
  DenseTensor cs({l, i1, i2});
  for (std::size_t t = 0; t < l; ++t) {
    RowMap am(as.data().data() + t * i1 * r, static_cast<Eigen::Index>(i1),
              static_cast<Eigen::Index>(r));
    RowMap bm(bs.data().data() + t * r * i2, static_cast<Eigen::Index>(r),
              static_cast<Eigen::Index>(i2));
    MutRowMap cm(cs.data().data() + t * i1 * i2, static_cast<Eigen::Index>(i1),
                 static_cast<Eigen::Index>(i2));
    cm.noalias() = am * bm;
  }
  return permute0(cs, {1, 2, 0});
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
  check_same_shape(a, b, "hadamard");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double frobenius_norm(const DenseTensor& x) {
  double sum = 0.0;
  for (double v : x.data()) sum += v * v;
  return std::sqrt(sum);
}

double inner_product(const DenseTensor& a, const DenseTensor& b) {
  check_same_shape(a, b, "inner product");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  check_same_shape(a, b, "addition");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  check_same_shape(a, b, "subtraction");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

DenseTensor operator*(double s, const DenseTensor& x) {
  DenseTensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
  return out;
}

}  // namespace tenexp
