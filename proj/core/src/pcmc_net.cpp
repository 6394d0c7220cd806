#include "pcmc/pcmc_net.hpp"

#include <cmath>

#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::leaky_relu: return "leaky_relu";
  }
  throw ValidationError("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "leaky_relu") return Activation::leaky_relu;
  throw ValidationError("unknown activation '" + name + "'");
}

void ArchitectureConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("config: epsilon must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("config: dropout must be in [0, 1)");
  if (hidden_layers < 0 || hidden_layers > 3) {
    throw ValidationError("config: hidden_layers must be in {0, 1, 2, 3}");
  }
  if (hidden_layers > 0 && nodes_per_layer < 1) {
    throw ValidationError("config: nodes_per_layer must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("config: learning rate must be > 0");
  if (batch_size < 1) throw ValidationError("config: batch size must be >= 1");
  if (max_epochs < 1) throw ValidationError("config: max epochs must be >= 1");
  if (patience < 1) throw ValidationError("config: patience must be >= 1");
  if (embedding_cap < 1) throw ValidationError("config: embedding cap must be >= 1");
}

std::size_t embedding_dim(std::size_t cardinality, std::size_t cap) {
  return std::min((cardinality + 1) / 2, cap);
}

PcmcNet::PcmcNet(FeatureSchema schema, ArchitectureConfig config)
    : schema_(std::move(schema)), config_(config) {
  schema_.validate();
  config_.validate();
}

void PcmcNet::compute_dims() {
  d0_ = 0;
  da_ = 0;
  n_ind_emb_ = 0;
  n_alt_emb_ = 0;
  for (const FieldSpec& f : schema_.individual_fields) {
    if (f.kind == FieldKind::numeric) {
      d0_ += 1;
    } else if (config_.one_hot_categoricals) {
      d0_ += f.cardinality;
    } else {
      d0_ += embedding_dim(f.cardinality, config_.embedding_cap);
      ++n_ind_emb_;
    }
  }
  for (const FieldSpec& f : schema_.alternative_fields) {
    if (f.kind == FieldKind::numeric) {
      da_ += 1;
    } else if (config_.one_hot_categoricals) {
      da_ += f.cardinality;
    } else {
      da_ += embedding_dim(f.cardinality, config_.embedding_cap);
      ++n_alt_emb_;
    }
  }
}

void PcmcNet::fit_encoders(const Dataset& data) {
  std::vector<const FeatureTuple*> individuals;
  std::vector<const FeatureTuple*> alternatives;
  individuals.reserve(data.size());
  for (const Session& s : data) {
    validate_session(s, schema_);
    individuals.push_back(&s.individual);
    for (const FeatureTuple& a : s.alternatives) alternatives.push_back(&a);
  }
  ind_enc_ = FeatureEncoder::fit(schema_.individual_fields, individuals);
  alt_enc_ = FeatureEncoder::fit(schema_.alternative_fields, alternatives);
  encoders_ready_ = true;
  compute_dims();
}

void PcmcNet::set_encoders(FeatureEncoder individual, FeatureEncoder alternative) {
  ind_enc_ = std::move(individual);
  alt_enc_ = std::move(alternative);
  encoders_ready_ = true;
  compute_dims();
}

void PcmcNet::init_parameters(std::uint64_t seed) {
  if (!encoders_ready_) throw ValidationError("pcmc-net: encoders must be fitted first");
  rng::Engine eng(rng::mix(seed, 0x1217u));
  params_.clear();

  // Embedding tables: one reserved out-of-vocabulary row per field.
  auto push_tables = [&](const std::vector<FieldSpec>& fields) {
    for (const FieldSpec& f : fields) {
      if (f.kind != FieldKind::categorical || config_.one_hot_categoricals) continue;
      const std::size_t d = embedding_dim(f.cardinality, config_.embedding_cap);
      Tensor table(f.cardinality + 1, d);
      for (std::size_t i = 0; i < table.size(); ++i) table[i] = eng.normal(0.0, 0.01);
      params_.push_back(std::move(table));
    }
  };
  push_tables(schema_.individual_fields);
  push_tables(schema_.alternative_fields);

  // He-style uniform fan-in init for the MLP.
  std::size_t fan_in = mlp_input_dim();
  if (fan_in == 0) throw ValidationError("pcmc-net: representation has dimension zero");
  for (int l = 0; l < config_.hidden_layers; ++l) {
    const std::size_t out = static_cast<std::size_t>(config_.nodes_per_layer);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor w(fan_in, out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = eng.uniform(-bound, bound);
    params_.push_back(std::move(w));
    params_.push_back(Tensor(1, out));
    fan_in = out;
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor w(fan_in, 1);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = eng.uniform(-bound, bound);
  params_.push_back(std::move(w));
  // The output bias starts at +epsilon so every rate begins above the
  // max(0,.)+eps clamp; rates that belong at the floor sink there during
  // training instead of starting with no gradient path.
  Tensor out_bias(1, 1);
  out_bias[0] = config_.epsilon;
  params_.push_back(std::move(out_bias));
}

void PcmcNet::set_parameters(std::vector<Tensor> params) {
  if (!encoders_ready_) throw ValidationError("pcmc-net: encoders must be fitted first");
  const std::size_t expected = n_ind_emb_ + n_alt_emb_ +
                               2 * static_cast<std::size_t>(config_.hidden_layers) + 2;
  if (params.size() != expected) {
    throw ValidationError("pcmc-net: expected " + std::to_string(expected) +
                          " parameter tensors, got " + std::to_string(params.size()));
  }
  params_ = std::move(params);
}

std::vector<std::string> PcmcNet::parameter_names() const {
  std::vector<std::string> names;
  auto emb_names = [&](const std::vector<FieldSpec>& fields, const std::string& side) {
    for (const FieldSpec& f : fields) {
      if (f.kind == FieldKind::categorical && !config_.one_hot_categoricals) {
        names.push_back("embedding." + side + "." + f.name);
      }
    }
  };
  emb_names(schema_.individual_fields, "individual");
  emb_names(schema_.alternative_fields, "alternative");
  for (int l = 0; l < config_.hidden_layers; ++l) {
    names.push_back("mlp.hidden" + std::to_string(l) + ".weight");
    names.push_back("mlp.hidden" + std::to_string(l) + ".bias");
  }
  names.push_back("mlp.output.weight");
  names.push_back("mlp.output.bias");
  return names;
}

std::size_t PcmcNet::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

namespace {

// One-hot row for a vocabulary index; the OOV row maps to all zeros.
void write_one_hot(Tensor& out, std::size_t row, std::size_t col_offset, std::size_t index,
                   std::size_t cardinality) {
  if (index < cardinality) out(row, col_offset + index) = 1.0;
}

}  // namespace

std::vector<double> PcmcNet::represent_individual(const FeatureTuple& t) const {
  if (!ready()) throw ValidationError("pcmc-net: model not initialized");
  std::vector<double> out;
  out.reserve(d0_);
  const std::vector<double> nums =
      config_.standardize_numeric ? ind_enc_.standardized(t) : t.numeric;
  for (double v : nums) out.push_back(v);
  const std::vector<std::size_t> rows = ind_enc_.categorical_rows(t);
  std::size_t emb_index = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t card = ind_enc_.cardinality(k);
    if (config_.one_hot_categoricals) {
      for (std::size_t j = 0; j < card; ++j) out.push_back(rows[k] == j ? 1.0 : 0.0);
    } else {
      const Tensor& table = params_[emb_index++];
      for (std::size_t j = 0; j < table.cols(); ++j) out.push_back(table(rows[k], j));
    }
  }
  return out;
}

std::vector<double> PcmcNet::represent_alternative(const FeatureTuple& t) const {
  if (!ready()) throw ValidationError("pcmc-net: model not initialized");
  std::vector<double> out;
  out.reserve(da_);
  const std::vector<double> nums =
      config_.standardize_numeric ? alt_enc_.standardized(t) : t.numeric;
  for (double v : nums) out.push_back(v);
  const std::vector<std::size_t> rows = alt_enc_.categorical_rows(t);
  std::size_t emb_index = n_ind_emb_;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t card = alt_enc_.cardinality(k);
    if (config_.one_hot_categoricals) {
      for (std::size_t j = 0; j < card; ++j) out.push_back(rows[k] == j ? 1.0 : 0.0);
    } else {
      const Tensor& table = params_[emb_index++];
      for (std::size_t j = 0; j < table.cols(); ++j) out.push_back(table(rows[k], j));
    }
  }
  return out;
}

PcmcNet::Bindings PcmcNet::bind(autodiff::Graph& g) const {
  if (!ready()) throw ValidationError("pcmc-net: model not initialized");
  Bindings b;
  b.params.reserve(params_.size());
  for (const Tensor& p : params_) b.params.push_back(g.parameter(p));
  return b;
}

autodiff::Var PcmcNet::build_q_hat(autodiff::Graph& g, const Bindings& b,
                                   const Session& session, bool train_mode) const {
  const std::size_t n = session.alternatives.size();
  using autodiff::Var;

  // Representation layer: standardized numerics plus embedded categoricals.
  std::vector<Var> alt_parts;
  const std::size_t num_alt_numeric = schema_.num_alternative_numeric();
  if (num_alt_numeric > 0) {
    Tensor nums(n, num_alt_numeric);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> row = config_.standardize_numeric
                                          ? alt_enc_.standardized(session.alternatives[i])
                                          : session.alternatives[i].numeric;
      for (std::size_t j = 0; j < num_alt_numeric; ++j) nums(i, j) = row[j];
    }
    alt_parts.push_back(g.constant(std::move(nums)));
  }
  const std::size_t n_alt_cat = schema_.num_alternative_categorical();
  if (n_alt_cat > 0) {
    std::vector<std::vector<std::size_t>> rows(n_alt_cat);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<std::size_t> r = alt_enc_.categorical_rows(session.alternatives[i]);
      for (std::size_t k = 0; k < n_alt_cat; ++k) rows[k].push_back(r[k]);
    }
    for (std::size_t k = 0; k < n_alt_cat; ++k) {
      if (config_.one_hot_categoricals) {
        const std::size_t card = alt_enc_.cardinality(k);
        Tensor hot(n, card);
        for (std::size_t i = 0; i < n; ++i) write_one_hot(hot, i, 0, rows[k][i], card);
        alt_parts.push_back(g.constant(std::move(hot)));
      } else {
        alt_parts.push_back(g.embedding_lookup(b.params[n_ind_emb_ + k], rows[k]));
      }
    }
  }
  const Var alt_repr = alt_parts.size() == 1 ? alt_parts[0] : g.concat_cols(alt_parts);

  Var ind_repr;
  if (d0_ > 0) {
    std::vector<Var> ind_parts;
    const std::size_t num_ind_numeric = schema_.num_individual_numeric();
    if (num_ind_numeric > 0) {
      const std::vector<double> row = config_.standardize_numeric
                                          ? ind_enc_.standardized(session.individual)
                                          : session.individual.numeric;
      ind_parts.push_back(g.constant(Tensor::row(row)));
    }
    const std::size_t n_ind_cat = schema_.num_individual_categorical();
    if (n_ind_cat > 0) {
      const std::vector<std::size_t> r = ind_enc_.categorical_rows(session.individual);
      for (std::size_t k = 0; k < n_ind_cat; ++k) {
        if (config_.one_hot_categoricals) {
          const std::size_t card = ind_enc_.cardinality(k);
          Tensor hot(1, card);
          write_one_hot(hot, 0, 0, r[k], card);
          ind_parts.push_back(g.constant(std::move(hot)));
        } else {
          ind_parts.push_back(g.embedding_lookup(b.params[k], {r[k]}));
        }
      }
    }
    ind_repr = ind_parts.size() == 1 ? ind_parts[0] : g.concat_cols(ind_parts);
  }

  // Cartesian product layer: R_ij = rho(I) (+) rho(S_i) (+) rho(S_j) for all
  // ordered pairs i != j, as one (n*(n-1), d0+2*da) batch.
  const std::size_t m = n * (n - 1);
  std::vector<std::size_t> left, right;
  left.reserve(m);
  right.reserve(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) {
        left.push_back(i);
        right.push_back(j);
      }
    }
  }
  std::vector<Var> r_parts;
  if (d0_ > 0) {
    r_parts.push_back(g.gather_rows(ind_repr, std::vector<std::size_t>(m, 0)));
  }
  r_parts.push_back(g.gather_rows(alt_repr, std::move(left)));
  r_parts.push_back(g.gather_rows(alt_repr, std::move(right)));
  Var x = g.concat_cols(r_parts);

  // Transition rate layer: MLP with the configured activation, then the
  // epsilon floor that enforces q_ij + q_ji > 0.
  const std::size_t mlp_base = n_ind_emb_ + n_alt_emb_;
  for (int l = 0; l < config_.hidden_layers; ++l) {
    x = g.add_row_vector(g.matmul(x, b.params[mlp_base + 2 * l]),
                         b.params[mlp_base + 2 * l + 1]);
    switch (config_.activation) {
      case Activation::relu: x = g.relu(x); break;
      case Activation::sigmoid: x = g.sigmoid(x); break;
      case Activation::tanh: x = g.tanh(x); break;
      case Activation::leaky_relu: x = g.leaky_relu(x, config_.leaky_slope); break;
    }
    x = g.dropout(x, config_.dropout, train_mode);
  }
  const std::size_t out_w = mlp_base + 2 * static_cast<std::size_t>(config_.hidden_layers);
  x = g.add_row_vector(g.matmul(x, b.params[out_w]), b.params[out_w + 1]);
  const Var rates = g.clamp_min_zero_plus_const(x, config_.epsilon);

  return g.row_neg_sum_diagonal(g.off_diagonal_from_pairs(rates, n));
}

autodiff::Var PcmcNet::build_forward(autodiff::Graph& g, const Bindings& b,
                                     const Session& session, bool train_mode) const {
  validate_session(session, schema_);
  const std::size_t n = session.alternatives.size();
  if (n == 1) return g.constant(Tensor::row({1.0}));

  // Stationary distribution layer: replaced-column system solved by the
  // differentiable LU node.
  const autodiff::Var q_hat = build_q_hat(g, b, session, train_mode);
  const autodiff::Var a = g.replace_last_column_ones(q_hat);
  Tensor rhs(1, n);
  rhs(0, n - 1) = 1.0;
  return g.linear_solve(a, g.constant(std::move(rhs)));
}

autodiff::Var PcmcNet::build_loss(autodiff::Graph& g, const Bindings& b, const Session& session,
                                  bool train_mode, std::size_t* underflows) const {
  const autodiff::Var pi = build_forward(g, b, session, train_mode);
  const autodiff::Var picked = g.pick(pi, 0, session.chosen_index);
  const autodiff::Var floored = g.floor_at(picked, kProbFloor);
  if (underflows != nullptr) *underflows += g.floor_hits(floored);
  return g.scale(g.log(floored), -1.0);
}

RateMatrix PcmcNet::build_rate_matrix(const Session& session) const {
  validate_session(session, schema_);
  const std::size_t n = session.alternatives.size();
  if (n == 1) return RateMatrix(1, {0.0});

  autodiff::Graph g;
  const Bindings b = bind(g);
  const autodiff::Var q_hat = build_q_hat(g, b, session, /*train_mode=*/false);
  const Tensor& v = g.value(q_hat);
  return RateMatrix(n, std::vector<double>(v.flat().begin(), v.flat().end()));
}

ChoiceDistribution PcmcNet::forward(const Session& session) const {
  autodiff::Graph g;
  const Bindings b = bind(g);
  const autodiff::Var pi = build_forward(g, b, session, /*train_mode=*/false);
  const Tensor& v = g.value(pi);
  std::vector<double> probs(v.flat().begin(), v.flat().end());
  double sum = 0.0;
  for (double& p : probs) {
    if (p < 0.0) {
      if (p < kNegativeProbFloor) {
        throw NumericError("pcmc-net: negative stationary mass " + std::to_string(p));
      }
      p = 0.0;
    }
    sum += p;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NumericError("pcmc-net: degenerate stationary vector");
  }
  for (double& p : probs) p /= sum;
  return {std::move(probs)};
}

double PcmcNet::session_loss(const Session& session, std::size_t* underflows) const {
  const ChoiceDistribution pi = forward(session);
  double p = pi.probs[session.chosen_index];
  if (p < kProbFloor) {
    if (underflows != nullptr) ++(*underflows);
    p = kProbFloor;
  }
  return -std::log(p);
}

}  // namespace pcmc
