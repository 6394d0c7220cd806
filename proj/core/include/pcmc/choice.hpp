#ifndef PCMC_CHOICE_HPP
#define PCMC_CHOICE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pcmc/tensor.hpp"

namespace pcmc {

// Tolerances shared by the rate-matrix invariants and the stationary solver.
inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kProbSumTol = 1e-10;
inline constexpr double kStationaryResidualTol = 1e-9;
inline constexpr double kNegativeProbFloor = -1e-12;

// Transition-rate matrix of a continuous-time Markov chain over n states.
// Off-diagonal entries are the pairwise rates q_ij >= 0; the diagonal is
// the negated off-diagonal row sum, so every row sums to zero.
struct RateMatrix {
  std::size_t n = 0;
  std::vector<double> rates;  // row-major n*n

  RateMatrix() = default;
  RateMatrix(std::size_t n_, std::vector<double> rates_) : n(n_), rates(std::move(rates_)) {}

  double& at(std::size_t i, std::size_t j) { return rates[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return rates[i * n + j]; }

  // Builds a matrix from off-diagonal rates, recomputing the diagonal.
  static RateMatrix from_off_diagonal(std::size_t n, std::span<const double> off_diag_rows);
  // Recompute q_ii = -sum_{j != i} q_ij in place.
  void recompute_diagonal();
};

struct ChoiceDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
};

struct ValidationResult {
  bool ok = true;
  std::string message;  // first violated invariant, with indices

  explicit operator bool() const { return ok; }
};

// Checks the PCMC rate-matrix invariants in order: nonnegative off-diagonal,
// q_ij + q_ji > 0 for every pair, rows summing to zero.
ValidationResult validate_rate_matrix(const RateMatrix& q);

// Restriction of q to a subset of states: off-diagonal rates are copied,
// the diagonal is recomputed from the restricted rows.
RateMatrix restrict_to(const RateMatrix& q, std::span<const std::size_t> subset);

// Stationary distribution pi with pi Q = 0, pi . 1 = 1, computed by replacing
// the last column of Q with ones and solving pi Q' = (0,...,0,1) with a
// partially-pivoted LU factorization. Throws SingularSystemError when the
// system is singular or the residual ||pi Q||_inf exceeds tolerance.
ChoiceDistribution solve_stationary(const RateMatrix& q_s);

// Probability of choosing `item` (an index of q's universe) from `subset`.
double pcmc_choice_prob(const RateMatrix& q, std::span<const std::size_t> subset,
                        std::size_t item);

// Row-major enumeration of ordered pairs (i, j), i != j, of n states: the
// flat index of (i, j) is i*(n-1) + (j < i ? j : j-1).
inline std::size_t pair_flat_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * (n - 1) + (j < i ? j : j - 1);
}

}  // namespace pcmc

#endif
