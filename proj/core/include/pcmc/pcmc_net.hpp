#ifndef PCMC_PCMC_NET_HPP
#define PCMC_PCMC_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pcmc/autodiff.hpp"
#include "pcmc/choice.hpp"
#include "pcmc/encoder.hpp"
#include "pcmc/schema.hpp"
#include "pcmc/session.hpp"

namespace pcmc {

enum class Activation { relu, sigmoid, tanh, leaky_relu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct ArchitectureConfig {
  int hidden_layers = 2;       // 0 = a single output neuron on the pair features
  int nodes_per_layer = 16;
  Activation activation = Activation::leaky_relu;
  double leaky_slope = 0.01;
  double epsilon = 0.5;        // rate floor; keeps q_ij + q_ji > 0 by construction
  double dropout = 0.0;
  double learning_rate = 1e-3;
  int batch_size = 1;
  int max_epochs = 100;
  int patience = 5;
  double min_delta = 0.01;
  std::uint64_t seed = 0;
  std::size_t embedding_cap = 50;
  bool one_hot_categoricals = false;  // fixed one-hot instead of trained embeddings
  bool standardize_numeric = true;
  bool refit_on_full = false;         // retrain on train+validation for the stopped epoch count

  void validate() const;
};

// Rule-of-thumb embedding width min(ceil(c/2), cap).
std::size_t embedding_dim(std::size_t cardinality, std::size_t cap);

// Amortized PCMC: representation layer (embeddings + standardized numerics),
// cartesian product of alternative representations, an MLP producing the
// pairwise transition rates, and a differentiable stationary-distribution
// layer.
class PcmcNet {
 public:
  PcmcNet(FeatureSchema schema, ArchitectureConfig config);

  void fit_encoders(const Dataset& data);
  bool ready() const { return encoders_ready_ && !params_.empty(); }
  void init_parameters(std::uint64_t seed);

  std::size_t d_individual() const { return d0_; }
  std::size_t d_alternative() const { return da_; }

  std::vector<double> represent_individual(const FeatureTuple& t) const;
  std::vector<double> represent_alternative(const FeatureTuple& t) const;

  // Non-training conveniences; both run the same graph as training.
  RateMatrix build_rate_matrix(const Session& session) const;
  ChoiceDistribution forward(const Session& session) const;
  // -log pi_hat[chosen]; probabilities are floored at kProbFloor before the
  // log and floor hits are reported through `underflows` when given.
  double session_loss(const Session& session, std::size_t* underflows = nullptr) const;

  static constexpr double kProbFloor = 1e-30;

  // Differentiable path.
  struct Bindings {
    std::vector<autodiff::Var> params;
  };
  Bindings bind(autodiff::Graph& g) const;
  // Probability node (1 x |S|).
  autodiff::Var build_forward(autodiff::Graph& g, const Bindings& b, const Session& session,
                              bool train_mode) const;
  // Scalar loss node; floor hits of this session are added to *underflows.
  autodiff::Var build_loss(autodiff::Graph& g, const Bindings& b, const Session& session,
                           bool train_mode, std::size_t* underflows = nullptr) const;

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  const FeatureSchema& schema() const { return schema_; }
  const ArchitectureConfig& config() const { return config_; }
  const FeatureEncoder& individual_encoder() const { return ind_enc_; }
  const FeatureEncoder& alternative_encoder() const { return alt_enc_; }

  // Checkpoint restore.
  void set_encoders(FeatureEncoder individual, FeatureEncoder alternative);
  void set_parameters(std::vector<Tensor> params);

 private:
  std::size_t mlp_input_dim() const { return d0_ + 2 * da_; }
  void compute_dims();
  // Rate-matrix node (n x n, diagonal completed); requires |S| >= 2.
  autodiff::Var build_q_hat(autodiff::Graph& g, const Bindings& b, const Session& session,
                            bool train_mode) const;

  FeatureSchema schema_;
  ArchitectureConfig config_;
  FeatureEncoder ind_enc_;
  FeatureEncoder alt_enc_;
  bool encoders_ready_ = false;
  std::vector<Tensor> params_;
  // layout: individual embedding tables, alternative embedding tables,
  // then (W, b) per hidden layer, then the output (W, b).
  std::size_t n_ind_emb_ = 0;
  std::size_t n_alt_emb_ = 0;
  std::size_t d0_ = 0;
  std::size_t da_ = 0;
};

}  // namespace pcmc

#endif
