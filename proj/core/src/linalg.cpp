#include "pcmc/linalg.hpp"

#include <cmath>
#include <string>

#include "pcmc/errors.hpp"

namespace pcmc::linalg {

LuDecomposition::LuDecomposition(const Tensor& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ValidationError("LU requires a nonempty square matrix");
  }
  n_ = a.rows();
  lu_.assign(a.flat().begin(), a.flat().end());
  perm_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;

  double max_abs = 0.0;
  for (double v : lu_) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) throw SingularSystemError("LU: zero matrix");
  const double pivot_floor = max_abs * 1e-15 * static_cast<double>(n_);

  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    double best = std::fabs(lu_[k * n_ + k]);
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double v = std::fabs(lu_[i * n_ + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best <= pivot_floor) {
      throw SingularSystemError("LU: singular matrix (pivot " + std::to_string(best) +
                                " at column " + std::to_string(k) + ")");
    }
    if (p != k) {
      for (std::size_t j = 0; j < n_; ++j) std::swap(lu_[k * n_ + j], lu_[p * n_ + j]);
      std::swap(perm_[k], perm_[p]);
    }
    const double pivot = lu_[k * n_ + k];
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double m = lu_[i * n_ + k] / pivot;
      lu_[i * n_ + k] = m;
      if (m != 0.0) {
        for (std::size_t j = k + 1; j < n_; ++j) lu_[i * n_ + j] -= m * lu_[k * n_ + j];
      }
    }
  }
}

std::vector<double> LuDecomposition::solve(std::span<const double> b) const {
  if (b.size() != n_) throw ValidationError("LU solve: rhs length mismatch");
  std::vector<double> x(n_);
  // Forward substitution with permuted rhs: L y = P b.
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_[i * n_ + j] * x[j];
    x[i] = s;
  }
  // Back substitution: U x = y.
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_[ii * n_ + j] * x[j];
    x[ii] = s / lu_[ii * n_ + ii];
  }
  return x;
}

std::vector<double> LuDecomposition::solve_transposed(std::span<const double> b) const {
  if (b.size() != n_) throw ValidationError("LU solve: rhs length mismatch");
  // A^T = U^T L^T P, so solve U^T z = b, then L^T w = z, then x = P^T w.
  std::vector<double> z(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_[j * n_ + i] * z[j];
    z[i] = s / lu_[i * n_ + i];
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_[j * n_ + ii] * z[j];
    z[ii] = s;
  }
  std::vector<double> x(n_);
  for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = z[i];
  return x;
}

std::vector<double> solve_row_system(const Tensor& a, std::span<const double> b) {
  return LuDecomposition(a).solve_transposed(b);
}

}  // namespace pcmc::linalg
