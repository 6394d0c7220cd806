#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "pcmc/choice.hpp"
#include "pcmc/datagen.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

using namespace pcmc;

namespace {

RateMatrix two_state(double q12, double q21) {
  return RateMatrix(2, {-q12, q12, q21, -q21});
}

RateMatrix random_valid(rng::Engine& eng, std::size_t n) {
  RateMatrix q(n, std::vector<double>(n * n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) q.at(i, j) = eng.uniform(0.1, 2.0);
    }
  }
  q.recompute_diagonal();
  return q;
}

}  // namespace

TEST_CASE("validate accepts a correct 2x2 matrix") {
  CHECK(validate_rate_matrix(two_state(1.0, 3.0)).ok);
}

TEST_CASE("validate rejects a zero pair") {
  RateMatrix q(2, {0.0, 0.0, 0.0, 0.0});
  const ValidationResult r = validate_rate_matrix(q);
  CHECK_FALSE(r.ok);
  CHECK(r.message.find("(0,1)") != std::string::npos);
}

TEST_CASE("validate reports negative rates and broken rows") {
  RateMatrix neg(2, {1.0, -1.0, 3.0, -3.0});
  CHECK(validate_rate_matrix(neg).message.find("negative") != std::string::npos);

  RateMatrix rows(2, {-1.0, 1.0, 3.0, -2.5});
  CHECK(validate_rate_matrix(rows).message.find("row") != std::string::npos);
}

TEST_CASE("the RPS matrix is valid for alpha in (1/2, 1]") {
  CHECK(validate_rate_matrix(datagen::rps_matrix(0.75)).ok);
  CHECK(validate_rate_matrix(datagen::rps_matrix(1.0)).ok);
}

TEST_CASE("restriction copies rates and recomputes the diagonal") {
  const RateMatrix q = datagen::rps_matrix(0.75);
  const std::vector<std::size_t> rock_paper{0, 1};
  const RateMatrix r = restrict_to(q, rock_paper);
  CHECK(r.at(0, 1) == doctest::Approx(0.25));
  CHECK(r.at(1, 0) == doctest::Approx(0.75));
  CHECK(r.at(0, 0) == doctest::Approx(-0.25));
  CHECK(r.at(1, 1) == doctest::Approx(-0.75));
}

TEST_CASE("restriction to a singleton is the 1x1 zero matrix") {
  const RateMatrix q = datagen::rps_matrix(0.8);
  const std::vector<std::size_t> one{2};
  const RateMatrix r = restrict_to(q, one);
  CHECK(r.n == 1);
  CHECK(r.rates[0] == 0.0);
}

TEST_CASE("restriction to the full universe reproduces the matrix") {
  rng::Engine eng(5);
  const RateMatrix q = random_valid(eng, 6);
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), 0);
  const RateMatrix r = restrict_to(q, all);
  for (std::size_t i = 0; i < 36; ++i) CHECK(r.rates[i] == doctest::Approx(q.rates[i]));
}

TEST_CASE("restriction errors: empty, out of range, duplicates") {
  const RateMatrix q = datagen::rps_matrix(0.75);
  CHECK_THROWS_AS(restrict_to(q, std::vector<std::size_t>{}), ValidationError);
  CHECK_THROWS_AS(restrict_to(q, std::vector<std::size_t>{0, 3}), ValidationError);
  CHECK_THROWS_AS(restrict_to(q, std::vector<std::size_t>{1, 1}), ValidationError);
}

TEST_CASE("nested restriction equals direct restriction") {
  rng::Engine eng(17);
  const RateMatrix q = random_valid(eng, 8);
  const std::vector<std::size_t> s{1, 3, 4, 6, 7};
  const std::vector<std::size_t> t{0, 2, 4};  // positions within s
  const RateMatrix inner = restrict_to(restrict_to(q, s), t);
  std::vector<std::size_t> composed;
  for (std::size_t pos : t) composed.push_back(s[pos]);
  const RateMatrix direct = restrict_to(q, composed);
  for (std::size_t i = 0; i < inner.rates.size(); ++i) {
    CHECK(inner.rates[i] == direct.rates[i]);  // exact
  }
}

TEST_CASE("two-state stationary distribution follows the balance equation") {
  // pi_1 q_12 = pi_2 q_21 with q_12 = 1, q_21 = 3 gives (0.75, 0.25).
  const ChoiceDistribution pi = solve_stationary(two_state(1.0, 3.0));
  CHECK(pi.probs[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pi.probs[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("RPS full set is uniform by cyclic symmetry") {
  for (double alpha : {0.6, 0.75, 0.9, 1.0}) {
    const ChoiceDistribution pi = solve_stationary(datagen::rps_matrix(alpha));
    for (double p : pi.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("RPS pairwise favored probability equals alpha") {
  const RateMatrix q = datagen::rps_matrix(0.75);
  const std::vector<std::size_t> rp{0, 1};
  const ChoiceDistribution pi = solve_stationary(restrict_to(q, rp));
  CHECK(pi.probs[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("pcmc_choice_prob singleton and pair cases") {
  const RateMatrix q = datagen::rps_matrix(0.8);
  const std::vector<std::size_t> single{1};
  CHECK(pcmc_choice_prob(q, single, 1) == doctest::Approx(1.0));
  const std::vector<std::size_t> rp{0, 1};
  CHECK(pcmc_choice_prob(q, rp, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(pcmc_choice_prob(q, rp, 2), ValidationError);
}

TEST_CASE("cyclic pairwise preferences violate stochastic transitivity") {
  const RateMatrix q = datagen::rps_matrix(0.75);
  const std::vector<std::size_t> rp{0, 1}, ps{1, 2}, sr{2, 0};
  CHECK(pcmc_choice_prob(q, rp, 0) == doctest::Approx(0.75));  // rock beats paper
  CHECK(pcmc_choice_prob(q, ps, 1) == doctest::Approx(0.75));  // paper beats scissors
  CHECK(pcmc_choice_prob(q, sr, 2) == doctest::Approx(0.75));  // scissors beats rock
}

TEST_CASE("MNL embedding: constant columns give Luce probabilities on every subset") {
  // q_ij = w_j embeds MNL; brute-force over all subsets of a 5-universe.
  const std::vector<double> w{0.3, 1.2, 2.5, 0.7, 1.9};
  RateMatrix q(5, std::vector<double>(25, 0.0));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j) q.at(i, j) = w[j];
    }
  }
  q.recompute_diagonal();

  for (unsigned mask = 1; mask < 32; ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < 5; ++i) {
      if (mask & (1u << i)) subset.push_back(i);
    }
    if (subset.size() < 2) continue;
    double wsum = 0.0;
    for (std::size_t i : subset) wsum += w[i];
    const ChoiceDistribution pi = solve_stationary(restrict_to(q, subset));
    for (std::size_t k = 0; k < subset.size(); ++k) {
      CHECK(std::fabs(pi.probs[k] - w[subset[k]] / wsum) < 1e-9);
    }
  }
}

TEST_CASE("property: random valid matrices solve to proper distributions") {
  rng::Engine eng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + eng.uniform_index(49);
    const RateMatrix q = random_valid(eng, n);
    REQUIRE(validate_rate_matrix(q).ok);
    const ChoiceDistribution pi = solve_stationary(q);

    double sum = 0.0;
    for (double p : pi.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) <= kProbSumTol);

    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += pi.probs[i] * q.at(i, j);
      residual = std::max(residual, std::fabs(s));
    }
    CHECK(residual < kStationaryResidualTol);
  }
}

TEST_CASE("property: stationary distribution is scale invariant") {
  rng::Engine eng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + eng.uniform_index(20);
    const RateMatrix q = random_valid(eng, n);
    const ChoiceDistribution base = solve_stationary(q);
    for (double c : {0.1, 10.0, 1000.0}) {
      RateMatrix scaled = q;
      for (double& v : scaled.rates) v *= c;
      const ChoiceDistribution pi = solve_stationary(scaled);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::fabs(pi.probs[i] - base.probs[i]) < 1e-9);
      }
    }
  }
}

TEST_CASE("solve_stationary rejects singleton-free broken input") {
  // A disconnected pair (both rates zero) has no unique stationary vector.
  RateMatrix q(2, {0.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(solve_stationary(q), NumericError);
}
