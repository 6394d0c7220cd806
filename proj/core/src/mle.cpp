#include "pcmc/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcmc/autodiff.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc::mle {

std::size_t ChoiceCounts::total_observations() const {
  double total = 0.0;
  for (const auto& [set, c] : counts) {
    for (double v : c) total += v;
  }
  return static_cast<std::size_t>(std::llround(total));
}

ChoiceCounts aggregate_counts(const std::vector<IndexSession>& sessions,
                              std::size_t universe_size) {
  ChoiceCounts out;
  for (const IndexSession& s : sessions) {
    if (s.set.empty()) throw ValidationError("aggregate_counts: empty choice set");
    if (s.chosen >= s.set.size()) {
      throw ValidationError("aggregate_counts: chosen position out of range");
    }
    for (std::size_t idx : s.set) {
      if (idx >= universe_size) {
        throw ValidationError("aggregate_counts: index " + std::to_string(idx) +
                              " outside the universe");
      }
    }
    std::vector<std::size_t> key = s.set;
    const std::size_t chosen_index = s.set[s.chosen];
    std::sort(key.begin(), key.end());
    if (std::adjacent_find(key.begin(), key.end()) != key.end()) {
      throw ValidationError("aggregate_counts: duplicate index in a choice set");
    }
    auto [it, inserted] = out.counts.try_emplace(key, std::vector<double>(key.size(), 0.0));
    const auto pos = std::lower_bound(key.begin(), key.end(), chosen_index) - key.begin();
    it->second[static_cast<std::size_t>(pos)] += 1.0;
  }
  return out;
}

double log_likelihood(const RateMatrix& q, const ChoiceCounts& counts) {
  double ll = 0.0;
  for (const auto& [set, c] : counts.counts) {
    bool any = false;
    for (double v : c) any = any || v > 0.0;
    if (!any) continue;
    const ChoiceDistribution pi = solve_stationary(restrict_to(q, set));
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (c[i] > 0.0) ll += c[i] * std::log(std::max(pi.probs[i], 1e-300));
    }
  }
  return ll;
}

namespace {

// Differentiable objective: rates is an (n*(n-1), 1) parameter column in
// row-major pair order; returns sum over sets of counts . log pi_S.
autodiff::Var build_objective(autodiff::Graph& g, autodiff::Var rates, std::size_t n,
                              const ChoiceCounts& counts) {
  std::vector<autodiff::Var> terms;
  for (const auto& [set, c] : counts.counts) {
    const std::size_t k = set.size();
    if (k == 1) continue;  // singleton sets carry zero log-probability
    std::vector<std::size_t> flat;
    flat.reserve(k * (k - 1));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (j != i) flat.push_back(pair_flat_index(set[i], set[j], n));
      }
    }
    autodiff::Var sub = g.gather_rows(rates, std::move(flat));
    autodiff::Var q_s = g.row_neg_sum_diagonal(g.off_diagonal_from_pairs(sub, k));
    autodiff::Var a = g.replace_last_column_ones(q_s);
    Tensor rhs(1, k);
    rhs(0, k - 1) = 1.0;
    autodiff::Var pi = g.linear_solve(a, g.constant(std::move(rhs)));
    terms.push_back(g.dot_const(g.log(g.floor_at(pi, 1e-300)), c));
  }
  if (terms.empty()) throw ValidationError("fit_mle: no informative choice sets");
  autodiff::Var total = terms[0];
  for (std::size_t t = 1; t < terms.size(); ++t) total = g.add(total, terms[t]);
  return total;
}

double objective_value(const Tensor& rates, std::size_t n, const ChoiceCounts& counts) {
  autodiff::Graph g;
  autodiff::Var r = g.constant(rates);
  return g.scalar_value(build_objective(g, r, n, counts));
}

}  // namespace

MleResult fit_mle(const ChoiceCounts& counts, std::size_t universe_size,
                  const MleOptions& options) {
  if (universe_size < 2) throw ValidationError("fit_mle: universe must have >= 2 items");
  if (counts.counts.empty()) throw ValidationError("fit_mle: no observations");

  // Additive smoothing: pseudo-count on every member of every observed set.
  ChoiceCounts smoothed = counts;
  for (auto& [set, c] : smoothed.counts) {
    for (double& v : c) v += options.smoothing;
  }

  const std::size_t m = universe_size * (universe_size - 1);
  MleResult best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < options.restarts; ++restart) {
    rng::Engine eng(rng::mix(options.seed, static_cast<std::uint64_t>(restart)));
    Tensor rates(m, 1);
    for (std::size_t i = 0; i < m; ++i) rates[i] = eng.uniform(0.5, 1.5);

    std::vector<double> trace;
    double current = -std::numeric_limits<double>::infinity();
    try {
      current = objective_value(rates, universe_size, smoothed);
    } catch (const NumericError&) {
      continue;  // abandon this restart, not the fit
    }
    trace.push_back(current);

    double step = 1.0;
    int small_improvements = 0;
    bool abandoned = false;
    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
      Tensor grad(m, 1);
      try {
        autodiff::Graph g;
        autodiff::Var r = g.parameter(rates);
        autodiff::Var obj = build_objective(g, r, universe_size, smoothed);
        current = g.scalar_value(obj);
        if (!std::isfinite(current)) throw NumericError("fit_mle: non-finite objective");
        g.backward(obj);
        grad = g.grad(r);
      } catch (const NumericError&) {
        abandoned = true;
        break;
      }

      double grad_inf = 0.0;
      for (std::size_t i = 0; i < m; ++i) grad_inf = std::max(grad_inf, std::fabs(grad[i]));
      if (grad_inf == 0.0) break;

      // Backtracking line search on the projected ascent step.
      bool accepted = false;
      double t = step;
      for (int bt = 0; bt < 40 && !accepted; ++bt) {
        Tensor trial = rates;
        for (std::size_t i = 0; i < m; ++i) {
          trial[i] = std::max(rates[i] + t * grad[i], options.epsilon_floor);
        }
        double trial_obj;
        try {
          trial_obj = objective_value(trial, universe_size, smoothed);
        } catch (const NumericError&) {
          t *= 0.5;
          continue;
        }
        if (std::isfinite(trial_obj) && trial_obj > current) {
          const double improvement = trial_obj - current;
          rates = std::move(trial);
          current = trial_obj;
          trace.push_back(current);
          step = std::min(t * 2.0, 1e3);
          accepted = true;
          if (improvement < options.improvement_tolerance) {
            ++small_improvements;
          } else {
            small_improvements = 0;
          }
        } else {
          t *= 0.5;
        }
      }
      if (!accepted) break;
      if (small_improvements >= options.improvement_patience) break;
    }
    if (abandoned && trace.empty()) continue;

    if (current > best.log_likelihood) {
      RateMatrix q(universe_size, std::vector<double>(universe_size * universe_size, 0.0));
      std::size_t k = 0;
      for (std::size_t i = 0; i < universe_size; ++i) {
        for (std::size_t j = 0; j < universe_size; ++j) {
          if (j != i) q.at(i, j) = rates[k++];
        }
      }
      q.recompute_diagonal();
      best.q = std::move(q);
      best.log_likelihood = current;
      best.trace = std::move(trace);
      best.best_restart = restart;
    }
  }

  if (!std::isfinite(best.log_likelihood)) {
    throw NumericError("fit_mle: every restart failed");
  }
  return best;
}

}  // namespace pcmc::mle
