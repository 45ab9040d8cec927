#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tenexp {

using Shape = std::vector<std::size_t>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

std::size_t element_count(const Shape& shape);

// Dense N-th order tensor of doubles stored row-major (last index fastest).
// Mode indices taken by the free functions below are 1-based.
class DenseTensor {
 public:
  DenseTensor();
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor filled(Shape shape, double value);
  static DenseTensor from_matrix(const Matrix& m);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t mode) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // 0-based multi-index access.
  double at(std::initializer_list<std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  std::size_t linear_index(std::span<const std::size_t> index) const;

  DenseTensor reshaped(Shape shape) const;
  Matrix as_matrix(std::size_t rows, std::size_t cols) const;

  bool all_finite() const;

  bool operator==(const DenseTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm);

Matrix generalized_unfold(const DenseTensor& x, std::span<const std::size_t> perm,
                          std::size_t q);
DenseTensor generalized_fold(const Matrix& m, std::span<const std::size_t> perm,
                             std::size_t q, const Shape& shape);

Matrix mode_n_unfold(const DenseTensor& x, std::size_t n);
DenseTensor mode_n_fold(const Matrix& m, std::size_t n, const Shape& shape);

DenseTensor mode_n_product(const DenseTensor& x, const Matrix& a, std::size_t n);

// Contracts paired modes; output modes are the free modes of a in ascending
// order followed by the free modes of b. A full contraction yields shape {1}.
DenseTensor tensor_contraction(const DenseTensor& a, const DenseTensor& b,
                               std::span<const std::size_t> modes_a,
                               std::span<const std::size_t> modes_b);

DenseTensor facewise_product(const DenseTensor& a, const DenseTensor& b);
Matrix frontal_slice(const DenseTensor& x, std::size_t n);

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);
double frobenius_norm(const DenseTensor& x);
double inner_product(const DenseTensor& a, const DenseTensor& b);

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& x);

}  // namespace tenexp
