#include "pcmc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc::datagen {

namespace {

constexpr std::uint64_t kSessionStream = 0x5E55;
constexpr std::uint64_t kSetStream = 0x5E7;
constexpr std::uint64_t kFeatureStream = 0xFEA7;
constexpr std::uint64_t kPlantStream = 0x91A27;

std::string level_name(const std::string& prefix, std::size_t i) {
  return prefix + std::to_string(i);
}

}  // namespace

RateMatrix rps_matrix(double alpha) {
  if (!(alpha > 0.5 && alpha <= 1.0)) {
    throw ValidationError("rps_matrix: alpha must lie in (1/2, 1]");
  }
  RateMatrix q(3, {-1.0, 1.0 - alpha, alpha,      //
                   alpha, -1.0, 1.0 - alpha,      //
                   1.0 - alpha, alpha, -1.0});
  return q;
}

FeatureSchema rps_schema() {
  FeatureSchema s;
  s.alternative_fields.push_back({"item", FieldKind::categorical, 3, 0.0, 0.0});
  return s;
}

RateMatrix random_pcmc(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random_pcmc: need n >= 2");
  rng::Engine eng(rng::mix(seed, 0x9C3Cu));
  RateMatrix q(n, std::vector<double>(n * n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) q.at(i, j) = eng.uniform(0.1, 2.0);
    }
  }
  q.recompute_diagonal();
  return q;
}

FeatureSchema indexed_schema(std::size_t universe_size) {
  FeatureSchema s;
  s.alternative_fields.push_back({"item", FieldKind::categorical, universe_size, 0.0, 0.0});
  return s;
}

std::size_t sample_choice(const ChoiceDistribution& dist, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    acc += dist.probs[i];
    if (u < acc) return i;
  }
  return dist.probs.size() - 1;
}

Dataset sample_sessions(const GroundTruth& truth, std::vector<Session> sets,
                        std::uint64_t seed) {
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const ChoiceDistribution dist =
        truth.choice_distribution(sets[k].individual, sets[k].alternatives);
    rng::Engine eng(rng::mix(seed, rng::mix(kSessionStream, k)));
    sets[k].chosen_index = sample_choice(dist, eng.uniform());
  }
  return sets;
}

namespace {

// Indexed ground truth backed by a fixed rate matrix; the single categorical
// field carries "item<k>" (or the RPS names for the 3-item case).
class MatrixTruth : public GroundTruth {
 public:
  MatrixTruth(RateMatrix q, std::vector<std::string> names)
      : q_(std::move(q)), names_(std::move(names)) {}

  ChoiceDistribution choice_distribution(const FeatureTuple&,
                                         const std::vector<FeatureTuple>& set) const override {
    std::vector<std::size_t> idx;
    idx.reserve(set.size());
    for (const FeatureTuple& alt : set) {
      const auto it = std::find(names_.begin(), names_.end(), alt.categorical.at(0));
      if (it == names_.end()) {
        throw ValidationError("matrix truth: unknown item '" + alt.categorical.at(0) + "'");
      }
      idx.push_back(static_cast<std::size_t>(it - names_.begin()));
    }
    return solve_stationary(restrict_to(q_, idx));
  }

 private:
  RateMatrix q_;
  std::vector<std::string> names_;
};

}  // namespace

Dataset sample_rps_sessions(double alpha, std::size_t n, std::uint64_t seed) {
  const RateMatrix q = rps_matrix(alpha);
  std::vector<std::string> names(kRpsItems, kRpsItems + 3);
  const MatrixTruth truth(q, names);

  static constexpr std::size_t kSets[4][3] = {{0, 1, 3}, {0, 2, 3}, {1, 2, 3}, {0, 1, 2}};
  std::vector<Session> sets;
  sets.reserve(n);
  rng::Engine eng(rng::mix(seed, kSetStream));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t* pick = kSets[eng.uniform_index(4)];
    Session s;
    for (std::size_t t = 0; t < 3; ++t) {
      if (pick[t] == 3) continue;  // sentinel for the pair sets
      FeatureTuple alt;
      alt.categorical.push_back(names[pick[t]]);
      s.alternatives.push_back(std::move(alt));
    }
    sets.push_back(std::move(s));
  }
  return sample_sessions(truth, std::move(sets), seed);
}

Dataset sample_indexed_sessions(const RateMatrix& q, std::size_t n, std::size_t max_set_size,
                                std::uint64_t seed) {
  if (max_set_size < 2 || max_set_size > q.n) {
    throw ValidationError("sample_indexed_sessions: max_set_size must lie in [2, n]");
  }
  std::vector<std::string> names;
  names.reserve(q.n);
  for (std::size_t i = 0; i < q.n; ++i) names.push_back(level_name("item", i));
  const MatrixTruth truth(q, names);

  rng::Engine eng(rng::mix(seed, kSetStream));
  std::vector<std::size_t> universe(q.n);
  std::iota(universe.begin(), universe.end(), 0);

  std::vector<Session> sets;
  sets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t size = 2 + eng.uniform_index(max_set_size - 1);
    eng.shuffle(universe);
    Session s;
    for (std::size_t t = 0; t < size; ++t) {
      FeatureTuple alt;
      alt.categorical.push_back(names[universe[t]]);
      s.alternatives.push_back(std::move(alt));
    }
    sets.push_back(std::move(s));
  }
  return sample_sessions(truth, std::move(sets), seed);
}

ChoiceDistribution context_oracle(double c1, double c2) {
  if (!(c1 >= kContextLo && c1 <= kContextHi && c2 >= kContextLo && c2 <= kContextHi)) {
    throw ValidationError("context_oracle: c must lie in [1,9]^2");
  }
  // Subjective value with a balance bonus (extremeness aversion), plus a
  // dominance boost toward dominating alternatives. Without the boost the
  // chain is reversible with marginals proportional to exp(2*beta*v), so
  // every IIA violation comes from the dominance term; the nonlinear value
  // keeps a linear-in-attributes logit from matching the marginals.
  constexpr double kBeta = 0.5;
  constexpr double kBalance = 1.0;
  constexpr double kGamma = 10.0;
  const double pts[3][2] = {{kContextA[0], kContextA[1]}, {kContextB[0], kContextB[1]}, {c1, c2}};

  const auto value = [&](int i) {
    return pts[i][0] + pts[i][1] + kBalance * std::min(pts[i][0], pts[i][1]);
  };
  const auto dominates = [&](int y, int x) {
    const bool ge = pts[y][0] >= pts[x][0] && pts[y][1] >= pts[x][1];
    const bool strict = pts[y][0] > pts[x][0] || pts[y][1] > pts[x][1];
    return ge && strict;
  };

  RateMatrix q(3, std::vector<double>(9, 0.0));
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      if (x == y) continue;
      q.at(x, y) = std::exp(kBeta * (value(y) - value(x))) + (dominates(y, x) ? kGamma : 0.0);
    }
  }
  q.recompute_diagonal();
  return solve_stationary(q);
}

FeatureSchema context_schema() {
  FeatureSchema s;
  s.alternative_fields.push_back({"attr1", FieldKind::numeric, 0, kContextLo, kContextHi});
  s.alternative_fields.push_back({"attr2", FieldKind::numeric, 0, kContextLo, kContextHi});
  return s;
}

Dataset sample_context_sessions(std::size_t n, std::uint64_t seed,
                                const ContextOracleFn& oracle) {
  rng::Engine eng(rng::mix(seed, kSetStream));
  Dataset data;
  data.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c1 = eng.uniform(kContextLo, kContextHi);
    const double c2 = eng.uniform(kContextLo, kContextHi);
    Session s;
    s.alternatives.resize(3);
    s.alternatives[0].numeric = {kContextA[0], kContextA[1]};
    s.alternatives[1].numeric = {kContextB[0], kContextB[1]};
    s.alternatives[2].numeric = {c1, c2};
    const ChoiceDistribution dist = oracle(c1, c2);
    rng::Engine choice_eng(rng::mix(seed, rng::mix(kSessionStream, k)));
    s.chosen_index = sample_choice(dist, choice_eng.uniform());
    data.push_back(std::move(s));
  }
  return data;
}

std::size_t context_bin_index(double c1, double c2, std::size_t bins_per_axis) {
  const double width = (kContextHi - kContextLo) / static_cast<double>(bins_per_axis);
  auto bin = [&](double v) {
    auto b = static_cast<std::size_t>((v - kContextLo) / width);
    return std::min(b, bins_per_axis - 1);
  };
  return bin(c1) * bins_per_axis + bin(c2);
}

FeatureSchema airline_schema() {
  FeatureSchema s;
  s.individual_fields.push_back({"od", FieldKind::categorical, 97, 0.0, 0.0});
  s.individual_fields.push_back({"office", FieldKind::categorical, 11, 0.0, 0.0});
  s.individual_fields.push_back({"weekday", FieldKind::numeric, 0, 0.0, 6.0});
  s.individual_fields.push_back({"stay_saturday", FieldKind::numeric, 0, 0.0, 1.0});
  s.individual_fields.push_back({"continental", FieldKind::numeric, 0, 0.0, 1.0});
  s.individual_fields.push_back({"domestic", FieldKind::numeric, 0, 0.0, 1.0});
  s.individual_fields.push_back({"days_to_departure", FieldKind::numeric, 0, 0.0, 343.0});
  s.alternative_fields.push_back({"airline", FieldKind::categorical, 63, 0.0, 0.0});
  s.alternative_fields.push_back({"price", FieldKind::numeric, 0, 77.15, 16781.5});
  s.alternative_fields.push_back({"stay_duration", FieldKind::numeric, 0, 121.0, 434000.0});
  s.alternative_fields.push_back({"trip_duration", FieldKind::numeric, 0, 105.0, 4314.0});
  s.alternative_fields.push_back({"connections", FieldKind::numeric, 0, 2.0, 6.0});
  s.alternative_fields.push_back({"airlines", FieldKind::numeric, 0, 1.0, 4.0});
  s.alternative_fields.push_back({"dep_time", FieldKind::numeric, 0, 0.0, 84000.0});
  s.alternative_fields.push_back({"arr_time", FieldKind::numeric, 0, 0.0, 84000.0});
  return s;
}

namespace {

Dataset airline_feature_sessions(const AirlineGenOptions& options) {
  const FeatureSchema schema = airline_schema();
  rng::Engine eng(rng::mix(options.seed, kFeatureStream));
  Dataset data;
  data.reserve(options.n_sessions);

  auto uniform_int = [&](double lo, double hi) {
    return std::floor(eng.uniform(lo, hi + 1.0));
  };

  for (std::size_t k = 0; k < options.n_sessions; ++k) {
    Session s;
    s.individual.categorical.push_back(level_name("OD", eng.uniform_index(97)));
    s.individual.categorical.push_back(level_name("OFF", eng.uniform_index(11)));
    s.individual.numeric.push_back(uniform_int(0, 6));
    s.individual.numeric.push_back(uniform_int(0, 1));
    s.individual.numeric.push_back(uniform_int(0, 1));
    s.individual.numeric.push_back(uniform_int(0, 1));
    s.individual.numeric.push_back(uniform_int(0, 343));

    std::size_t set_size = 1;
    if (!eng.bernoulli(options.singleton_prob)) {
      set_size = 2 + eng.uniform_index(options.max_set_size - 1);
    }
    for (std::size_t a = 0; a < set_size; ++a) {
      FeatureTuple alt;
      alt.categorical.push_back(level_name("AL", eng.uniform_index(63)));
      alt.numeric.push_back(eng.uniform(77.15, 16781.5));
      alt.numeric.push_back(eng.uniform(121.0, 434000.0));
      alt.numeric.push_back(eng.uniform(105.0, 4314.0));
      alt.numeric.push_back(uniform_int(2, 6));
      alt.numeric.push_back(uniform_int(1, 4));
      alt.numeric.push_back(eng.uniform(0.0, 84000.0));
      alt.numeric.push_back(eng.uniform(0.0, 84000.0));
      s.alternatives.push_back(std::move(alt));
    }
    validate_session(s, schema);
    data.push_back(std::move(s));
  }
  return data;
}

}  // namespace

PcmcNet airline_planted_model(const AirlineGenOptions& options, const Dataset& features) {
  ArchitectureConfig config;
  config.hidden_layers = options.planted_hidden_layers;
  config.nodes_per_layer = options.planted_nodes;
  config.activation = options.planted_activation;
  config.epsilon = 0.5;
  config.seed = rng::mix(options.seed, kPlantStream);

  PcmcNet model(airline_schema(), config);
  model.fit_encoders(features);
  model.init_parameters(config.seed);
  // Sharpen the planted preferences so choices carry learnable signal.
  std::vector<Tensor>& params = model.parameters();
  Tensor& out_w = params[params.size() - 2];
  for (std::size_t i = 0; i < out_w.size(); ++i) out_w[i] *= options.planted_gain;
  return model;
}

Dataset airline_synthetic(const AirlineGenOptions& options) {
  if (options.max_set_size < 2 || options.max_set_size > 50) {
    throw ValidationError("airline_synthetic: max_set_size must lie in [2, 50]");
  }
  Dataset data = airline_feature_sessions(options);
  const PcmcNet planted = airline_planted_model(options, data);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const ChoiceDistribution dist = planted.forward(data[k]);
    rng::Engine eng(rng::mix(options.seed, rng::mix(kSessionStream, k)));
    data[k].chosen_index = sample_choice(dist, eng.uniform());
  }
  return data;
}

}  // namespace pcmc::datagen
