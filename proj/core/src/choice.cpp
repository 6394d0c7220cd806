#include "pcmc/choice.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "pcmc/errors.hpp"
#include "pcmc/linalg.hpp"

namespace pcmc {

RateMatrix RateMatrix::from_off_diagonal(std::size_t n, std::span<const double> off_diag_rows) {
  if (off_diag_rows.size() != n * n) {
    throw ValidationError("from_off_diagonal: expected a full n*n buffer");
  }
  RateMatrix q(n, std::vector<double>(off_diag_rows.begin(), off_diag_rows.end()));
  q.recompute_diagonal();
  return q;
}

void RateMatrix::recompute_diagonal() {
  for (std::size_t i = 0; i < n; ++i) {
    long double row_sum = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row_sum += at(i, j);
    }
    at(i, i) = static_cast<double>(-row_sum);
  }
}

ValidationResult validate_rate_matrix(const RateMatrix& q) {
  if (q.rates.size() != q.n * q.n || q.n == 0) {
    return {false, "rate matrix storage does not match its declared size"};
  }
  for (std::size_t i = 0; i < q.n; ++i) {
    for (std::size_t j = 0; j < q.n; ++j) {
      if (i != j && !(q.at(i, j) >= 0.0)) {
        return {false, "negative off-diagonal rate q(" + std::to_string(i) + "," +
                           std::to_string(j) + ") = " + std::to_string(q.at(i, j))};
      }
    }
  }
  for (std::size_t i = 0; i < q.n; ++i) {
    for (std::size_t j = i + 1; j < q.n; ++j) {
      if (!(q.at(i, j) + q.at(j, i) > 0.0)) {
        return {false, "pair (" + std::to_string(i) + "," + std::to_string(j) +
                           ") has q_ij + q_ji = 0"};
      }
    }
  }
  for (std::size_t i = 0; i < q.n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < q.n; ++j) row_sum += q.at(i, j);
    if (!(std::fabs(row_sum) <= kRowSumTol)) {
      return {false, "row " + std::to_string(i) + " sums to " + std::to_string(row_sum)};
    }
  }
  return {};
}

RateMatrix restrict_to(const RateMatrix& q, std::span<const std::size_t> subset) {
  if (subset.empty()) throw ValidationError("restrict_to: empty subset");
  std::unordered_set<std::size_t> seen;
  for (std::size_t s : subset) {
    if (s >= q.n) {
      throw ValidationError("restrict_to: index " + std::to_string(s) + " out of range");
    }
    if (!seen.insert(s).second) {
      throw ValidationError("restrict_to: duplicate index " + std::to_string(s));
    }
  }
  const std::size_t m = subset.size();
  RateMatrix r(m, std::vector<double>(m * m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) r.at(i, j) = q.at(subset[i], subset[j]);
    }
  }
  r.recompute_diagonal();
  return r;
}

ChoiceDistribution solve_stationary(const RateMatrix& q_s) {
  const std::size_t n = q_s.n;
  if (n == 0) throw ValidationError("solve_stationary: empty matrix");
  if (n == 1) return {{1.0}};

  // Replaced-column system: last column of Q_S becomes ones.
  Tensor a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) a(i, j) = q_s.at(i, j);
    a(i, n - 1) = 1.0;
  }
  std::vector<double> rhs(n, 0.0);
  rhs[n - 1] = 1.0;
  std::vector<double> pi = linalg::solve_row_system(a, rhs);

  // Residual check against the original matrix.
  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pi[i] * q_s.at(i, j);
    residual = std::max(residual, std::fabs(s));
  }
  if (!(residual < kStationaryResidualTol)) {
    throw SingularSystemError("solve_stationary: residual " + std::to_string(residual) +
                              " exceeds tolerance (ill-conditioned or invalid rate matrix)");
  }

  // Floating-point noise policy: tiny negatives are clamped, real negatives
  // are an error.
  double sum = 0.0;
  for (double& p : pi) {
    if (p < 0.0) {
      if (p < kNegativeProbFloor) {
        throw SingularSystemError("solve_stationary: negative stationary mass " +
                                  std::to_string(p));
      }
      p = 0.0;
    }
    sum += p;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw SingularSystemError("solve_stationary: degenerate stationary vector");
  }
  for (double& p : pi) p /= sum;
  return {std::move(pi)};
}

double pcmc_choice_prob(const RateMatrix& q, std::span<const std::size_t> subset,
                        std::size_t item) {
  const auto pos = std::find(subset.begin(), subset.end(), item);
  if (pos == subset.end()) {
    throw ValidationError("pcmc_choice_prob: item " + std::to_string(item) +
                          " not in the choice set");
  }
  const ChoiceDistribution pi = solve_stationary(restrict_to(q, subset));
  return pi.probs[static_cast<std::size_t>(pos - subset.begin())];
}

}  // namespace pcmc
