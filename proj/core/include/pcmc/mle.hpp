#ifndef PCMC_MLE_HPP
#define PCMC_MLE_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "pcmc/choice.hpp"

namespace pcmc::mle {

// Index-based choice observation over a finite universe.
struct IndexSession {
  std::vector<std::size_t> set;  // distinct universe indices
  std::size_t chosen = 0;        // position within `set`
};

// Aggregated choice counts: sorted choice set -> per-member counts. Counts
// are doubles so additive smoothing can reuse the same container.
struct ChoiceCounts {
  std::map<std::vector<std::size_t>, std::vector<double>> counts;

  std::size_t total_observations() const;
};

ChoiceCounts aggregate_counts(const std::vector<IndexSession>& sessions,
                              std::size_t universe_size);

// Eq.-4 style log likelihood: sum over sets and members of count * log P_S(i).
double log_likelihood(const RateMatrix& q, const ChoiceCounts& counts);

struct MleOptions {
  int restarts = 20;
  // First-order ascent needs a larger budget than a quasi-Newton method
  // would; convergence still cuts runs short via the improvement rule.
  int max_outer_iterations = 500;
  double smoothing = 0.1;        // additive pseudo-count per (set, member)
  double epsilon_floor = 1e-3;   // projection floor keeping q_ij + q_ji > 0
  double improvement_tolerance = 1e-8;
  int improvement_patience = 10;
  std::uint64_t seed = 0;
};

struct MleResult {
  RateMatrix q;
  double log_likelihood = 0.0;       // on the smoothed counts
  std::vector<double> trace;          // objective after each accepted step
  int best_restart = 0;
};

// Projected gradient ascent on the off-diagonal rates, gradients taken
// through the differentiable stationary solve; best of `restarts` seeded
// restarts wins (ties to the lower restart index).
MleResult fit_mle(const ChoiceCounts& counts, std::size_t universe_size,
                  const MleOptions& options = {});

}  // namespace pcmc::mle

#endif
