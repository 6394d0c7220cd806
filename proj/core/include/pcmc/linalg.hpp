#ifndef PCMC_LINALG_HPP
#define PCMC_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "pcmc/tensor.hpp"

namespace pcmc::linalg {

// Partially-pivoted LU decomposition of a dense square matrix.
// Factors P*A = L*U once and then serves solves with both A and A^T,
// which is what the adjoint rule of the differentiable solve needs.
class LuDecomposition {
 public:
  // Throws SingularSystemError when a pivot collapses.
  explicit LuDecomposition(const Tensor& a);

  std::size_t dim() const { return n_; }

  // Solve A x = b.
  std::vector<double> solve(std::span<const double> b) const;
  // Solve A^T x = b.
  std::vector<double> solve_transposed(std::span<const double> b) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> lu_;    // row-major, L below diagonal (unit), U on/above
  std::vector<std::size_t> perm_;  // row permutation applied to the input
};

// Row-convention solve: find x with x A = b. Equivalent to A^T x^T = b^T.
std::vector<double> solve_row_system(const Tensor& a, std::span<const double> b);

}  // namespace pcmc::linalg

#endif
