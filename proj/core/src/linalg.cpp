#include "tenexp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "tenexp/errors.hpp"

namespace tenexp {

namespace {

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw ArgumentError("svd input contains non-finite entries");
}

[[noreturn]] void report_failure(const Matrix& m, Eigen::ComputationInfo info) {
  throw NumericalError("svd of " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       " matrix did not converge (Eigen status " +
                       std::to_string(static_cast<int>(info)) + ")");
}

}  // namespace

SvdResult svd(const Matrix& m) {
  check_finite(m);
  Eigen::MatrixXd cm = m;
  Eigen::BDCSVD<Eigen::MatrixXd> solver(cm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) report_failure(m, solver.info());

  SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      const double v = out.u(i, j);
      if (std::abs(v) > 1e-10) {
        if (v < 0) {
          out.u.col(j) *= -1.0;
          out.v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

Vector singular_values(const Matrix& m) {
  check_finite(m);
  Eigen::MatrixXd cm = m;
  Eigen::BDCSVD<Eigen::MatrixXd> solver(cm);
  if (solver.info() != Eigen::Success) report_failure(m, solver.info());
  return solver.singularValues();
}

std::size_t numerical_rank(const Vector& s, std::size_t rows, std::size_t cols) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double tol =
      static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++r;
  }
  return r;
}

}  // namespace tenexp
