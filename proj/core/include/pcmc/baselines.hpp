#ifndef PCMC_BASELINES_HPP
#define PCMC_BASELINES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pcmc/encoder.hpp"
#include "pcmc/model.hpp"
#include "pcmc/rng.hpp"

namespace pcmc {

// Linear-in-features multinomial logit over the alternatives' features only:
// standardized numerics plus one-hot categoricals, P_S(i) proportional to
// exp(beta . x_i).
class MnlModel : public ChoiceModel {
 public:
  MnlModel(FeatureSchema schema, FeatureEncoder alt_encoder, std::vector<double> weights);

  std::string kind() const override { return "mnl"; }
  const FeatureSchema& schema() const override { return schema_; }
  ChoiceDistribution predict(const Session& session) const override;

  // Encoded feature vector of one alternative.
  std::vector<double> encode(const FeatureTuple& alt) const;
  std::size_t feature_dim() const;

  const std::vector<double>& weights() const { return weights_; }
  const FeatureEncoder& encoder() const { return alt_enc_; }

 private:
  FeatureSchema schema_;
  FeatureEncoder alt_enc_;
  std::vector<double> weights_;
};

struct MnlFitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // infinity norm of the mean gradient
  double separation_norm = 1e3;      // |w| beyond this flags separation
};

struct MnlFitResult {
  MnlModel model;
  double mean_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separation_warning = false;
};

MnlFitResult fit_mnl(const FeatureSchema& schema, const Dataset& data,
                     const MnlFitOptions& options = {});

// Uniform probabilities over the choice set; probabilistic (NLL defined).
class UniformModel : public ChoiceModel {
 public:
  explicit UniformModel(FeatureSchema schema) : schema_(std::move(schema)) {}
  std::string kind() const override { return "uniform"; }
  const FeatureSchema& schema() const override { return schema_; }
  ChoiceDistribution predict(const Session& session) const override;

 private:
  FeatureSchema schema_;
};

// Non-probabilistic ranker sorting ascending by one numeric field
// ("cheapest" on price, "shortest" on trip_duration).
class FieldRanker : public ChoiceModel {
 public:
  FieldRanker(std::string kind, FeatureSchema schema, std::string field_name);

  std::string kind() const override { return kind_; }
  bool probabilistic() const override { return false; }
  const FeatureSchema& schema() const override { return schema_; }
  ChoiceDistribution predict(const Session& session) const override;
  std::vector<double> scores(const Session& session) const override;

  const std::string& field_name() const { return field_name_; }

 private:
  FeatureSchema schema_;
  std::string kind_;
  std::string field_name_;
  std::size_t numeric_index_ = 0;
};

// Ranking helpers; ties are broken by the caller-provided engine.
std::vector<std::size_t> rank_uniform(const Session& session, rng::Engine& tie_break);
std::vector<std::size_t> rank_by_field_ascending(const Session& session,
                                                 const FeatureSchema& schema,
                                                 const std::string& field_name,
                                                 rng::Engine& tie_break);

}  // namespace pcmc

#endif
