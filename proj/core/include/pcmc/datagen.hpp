#ifndef PCMC_DATAGEN_HPP
#define PCMC_DATAGEN_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pcmc/choice.hpp"
#include "pcmc/pcmc_net.hpp"
#include "pcmc/schema.hpp"
#include "pcmc/session.hpp"

namespace pcmc::datagen {

// Ground truth able to score any choice set it is asked about.
class GroundTruth {
 public:
  virtual ~GroundTruth() = default;
  virtual ChoiceDistribution choice_distribution(const FeatureTuple& individual,
                                                 const std::vector<FeatureTuple>& set) const = 0;
};

// --- Rock-paper-scissors -------------------------------------------------

// The 3x3 cyclic matrix with rows (-1, 1-alpha, alpha) etc.; valid for
// 1/2 < alpha <= 1 and non-regular for alpha > 1/2.
RateMatrix rps_matrix(double alpha);

// Item names in matrix index order.
inline const char* kRpsItems[3] = {"rock", "paper", "scissors"};

FeatureSchema rps_schema();

// Sessions drawn over all three pairs and the full triple (uniformly at
// random per session), choices sampled from the RPS model.
Dataset sample_rps_sessions(double alpha, std::size_t n, std::uint64_t seed);

// --- Random PCMC universes ------------------------------------------------

// Off-diagonal rates i.i.d. Uniform(0.1, 2.0); valid by construction.
RateMatrix random_pcmc(std::size_t n, std::uint64_t seed);

FeatureSchema indexed_schema(std::size_t universe_size);

// Sessions over an indexed universe; each session's set is a uniformly
// random subset of size in [2, max_set_size], choice from the matrix.
Dataset sample_indexed_sessions(const RateMatrix& q, std::size_t n, std::size_t max_set_size,
                                std::uint64_t seed);

// --- Context-effect oracle -------------------------------------------------

// Fixed originals of the two-attribute context experiment.
inline constexpr double kContextA[2] = {4.0, 6.0};
inline constexpr double kContextB[2] = {6.0, 4.0};
inline constexpr double kContextLo = 1.0;
inline constexpr double kContextHi = 9.0;

// Dominance-boosted PCMC oracle over {a, b, c}:
//   q_xy = exp(beta * (v(y) - v(x))) + gamma * [y dominates x componentwise]
// with the subjective value v(x) = x1 + x2 + min(x1, x2) (balance bonus),
// beta = 0.5, gamma = 10. The dominance boost produces attraction-style
// context effects; the nonlinear value keeps the marginals away from any
// linear-in-attributes logit.
ChoiceDistribution context_oracle(double c1, double c2);

// Swappable oracle hook: experiments accept any 3-outcome oracle over c, so
// a faithful MLBA implementation can be dropped in without code changes.
using ContextOracleFn = std::function<ChoiceDistribution(double c1, double c2)>;

FeatureSchema context_schema();

// Sessions {a, b, c} with c uniform in [1,9]^2, choices from the oracle.
Dataset sample_context_sessions(std::size_t n, std::uint64_t seed,
                                const ContextOracleFn& oracle = context_oracle);

// Discretized variant for index-based MLE: c snapped to an 8x8 equal-width
// grid over [1,9]^2, items indexed a=0, b=1, bins 2..65.
std::size_t context_bin_index(double c1, double c2, std::size_t bins_per_axis);

// --- Airline-style synthetic data ------------------------------------------

FeatureSchema airline_schema();

struct AirlineGenOptions {
  std::size_t n_sessions = 1000;
  std::size_t max_set_size = 50;
  double singleton_prob = 0.1;
  std::uint64_t seed = 0;
  // Planted choice model: a random-weight PCMC-Net guaranteeing learnable
  // non-IIA structure. Saturating units give the rates strong pair
  // interactions; the gain sharpens the sampled choices.
  int planted_hidden_layers = 2;
  int planted_nodes = 16;
  Activation planted_activation = Activation::tanh;
  double planted_gain = 4.0;
};

// Feature values sampled within the declared ranges; choices sampled from
// the planted model.
Dataset airline_synthetic(const AirlineGenOptions& options);

// The planted model used by airline_synthetic for the same options.
PcmcNet airline_planted_model(const AirlineGenOptions& options, const Dataset& features);

// --- Generic sampling -------------------------------------------------------

// Draw one choice index from a distribution.
std::size_t sample_choice(const ChoiceDistribution& dist, double u);

// For each prepared session (choice fields ignored), draw the chosen index
// from the ground truth with a per-session derived seed.
Dataset sample_sessions(const GroundTruth& truth, std::vector<Session> sets,
                        std::uint64_t seed);

}  // namespace pcmc::datagen

#endif
