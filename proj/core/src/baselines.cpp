#include "pcmc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcmc/errors.hpp"

namespace pcmc {

namespace {

std::size_t encoded_dim(const FeatureSchema& schema, const FeatureEncoder& enc) {
  std::size_t d = 0, cat = 0;
  for (const FieldSpec& f : schema.alternative_fields) {
    d += (f.kind == FieldKind::numeric) ? 1 : enc.cardinality(cat++);
  }
  return d;
}

// Softmax of utilities, stabilized by the max shift.
std::vector<double> softmax(const std::vector<double>& u) {
  const double umax = *std::max_element(u.begin(), u.end());
  std::vector<double> p(u.size());
  double z = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    p[i] = std::exp(u[i] - umax);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

MnlModel::MnlModel(FeatureSchema schema, FeatureEncoder alt_encoder,
                   std::vector<double> weights)
    : schema_(std::move(schema)), alt_enc_(std::move(alt_encoder)), weights_(std::move(weights)) {
  if (weights_.size() != feature_dim()) {
    throw ValidationError("mnl: weight vector length " + std::to_string(weights_.size()) +
                          " does not match encoded feature dimension " +
                          std::to_string(feature_dim()));
  }
}

std::size_t MnlModel::feature_dim() const {
  std::size_t d = 0;
  std::size_t cat = 0;
  for (const FieldSpec& f : schema_.alternative_fields) {
    if (f.kind == FieldKind::numeric) {
      d += 1;
    } else {
      d += alt_enc_.cardinality(cat++);
    }
  }
  return d;
}

std::vector<double> MnlModel::encode(const FeatureTuple& alt) const {
  std::vector<double> x;
  const std::vector<double> nums = alt_enc_.standardized(alt);
  x.insert(x.end(), nums.begin(), nums.end());
  const std::vector<std::size_t> rows = alt_enc_.categorical_rows(alt);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t card = alt_enc_.cardinality(k);
    const std::size_t base = x.size();
    x.resize(base + card, 0.0);
    if (rows[k] < card) x[base + rows[k]] = 1.0;  // OOV encodes as all-zero
  }
  return x;
}

ChoiceDistribution MnlModel::predict(const Session& session) const {
  validate_session(session, schema_);
  std::vector<double> u(session.alternatives.size());
  for (std::size_t i = 0; i < session.alternatives.size(); ++i) {
    const std::vector<double> x = encode(session.alternatives[i]);
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += weights_[j] * x[j];
    u[i] = dot;
  }
  return {softmax(u)};
}

MnlFitResult fit_mnl(const FeatureSchema& schema, const Dataset& data,
                     const MnlFitOptions& options) {
  if (data.empty()) throw ValidationError("fit_mnl: empty dataset");
  schema.validate();

  std::vector<const FeatureTuple*> alternatives;
  for (const Session& s : data) {
    validate_session(s, schema);
    for (const FeatureTuple& a : s.alternatives) alternatives.push_back(&a);
  }
  FeatureEncoder enc = FeatureEncoder::fit(schema.alternative_fields, alternatives);

  // Pre-encode every alternative once.
  std::vector<std::vector<std::vector<double>>> encoded(data.size());
  const std::size_t dim = encoded_dim(schema, enc);
  MnlModel probe(schema, enc, std::vector<double>(dim, 0.0));
  for (std::size_t s = 0; s < data.size(); ++s) {
    encoded[s].reserve(data[s].alternatives.size());
    for (const FeatureTuple& a : data[s].alternatives) encoded[s].push_back(probe.encode(a));
  }

  std::vector<double> w(dim, 0.0);

  const auto objective_and_gradient = [&](const std::vector<double>& weights,
                                          std::vector<double>* grad) {
    if (grad != nullptr) grad->assign(dim, 0.0);
    double ll = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
      const auto& xs = encoded[s];
      std::vector<double> u(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += weights[j] * xs[i][j];
        u[i] = dot;
      }
      const std::vector<double> p = softmax(u);
      ll += std::log(std::max(p[data[s].chosen_index], 1e-300));
      if (grad != nullptr) {
        for (std::size_t j = 0; j < dim; ++j) {
          double expect = 0.0;
          for (std::size_t i = 0; i < xs.size(); ++i) expect += p[i] * xs[i][j];
          (*grad)[j] += xs[data[s].chosen_index][j] - expect;
        }
      }
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    if (grad != nullptr) {
      for (double& gj : *grad) gj *= inv_n;
    }
    return ll * inv_n;
  };

  MnlFitResult result{MnlModel(schema, enc, w), 0.0, 0, false, false};
  double ll = objective_and_gradient(w, nullptr);
  std::vector<double> grad;
  double step = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    ll = objective_and_gradient(w, &grad);
    double grad_inf = 0.0;
    double grad_sq = 0.0;
    for (double gj : grad) {
      grad_inf = std::max(grad_inf, std::fabs(gj));
      grad_sq += gj * gj;
    }
    result.iterations = it + 1;
    if (grad_inf < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    // Backtracking ascent with a gently adaptive initial step.
    std::vector<double> trial(dim);
    double t = step;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = w[j] + t * grad[j];
      const double trial_ll = objective_and_gradient(trial, nullptr);
      if (trial_ll > ll + 1e-4 * t * grad_sq) {
        w = trial;
        ll = trial_ll;
        step = std::min(t * 2.0, 1e4);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no ascent direction progress at machine precision
  }

  double norm = 0.0;
  for (double wj : w) norm += wj * wj;
  result.separation_warning = std::sqrt(norm) > options.separation_norm;
  result.mean_log_likelihood = ll;
  result.model = MnlModel(schema, enc, std::move(w));
  return result;
}

ChoiceDistribution UniformModel::predict(const Session& session) const {
  validate_session(session, schema_);
  const std::size_t n = session.alternatives.size();
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

FieldRanker::FieldRanker(std::string kind, FeatureSchema schema, std::string field_name)
    : schema_(std::move(schema)), kind_(std::move(kind)), field_name_(std::move(field_name)) {
  std::size_t ni = 0;
  bool found = false;
  for (const FieldSpec& f : schema_.alternative_fields) {
    if (f.kind != FieldKind::numeric) continue;
    if (f.name == field_name_) {
      numeric_index_ = ni;
      found = true;
      break;
    }
    ++ni;
  }
  if (!found) {
    throw ValidationError("ranker '" + kind_ + "': numeric field '" + field_name_ +
                          "' not in the schema");
  }
}

ChoiceDistribution FieldRanker::predict(const Session&) const {
  throw ValidationError("ranker '" + kind_ + "' is non-probabilistic");
}

std::vector<double> FieldRanker::scores(const Session& session) const {
  validate_session(session, schema_);
  std::vector<double> s(session.alternatives.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = -session.alternatives[i].numeric.at(numeric_index_);  // ascending field = best
  }
  return s;
}

namespace {

std::vector<std::size_t> ranking_from_scores(const std::vector<double>& scores,
                                             rng::Engine& tie_break) {
  std::vector<double> priority(scores.size());
  for (double& p : priority) p = tie_break.uniform();
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return priority[a] > priority[b];
  });
  return order;
}

}  // namespace

std::vector<std::size_t> rank_uniform(const Session& session, rng::Engine& tie_break) {
  return ranking_from_scores(std::vector<double>(session.alternatives.size(), 0.0), tie_break);
}

std::vector<std::size_t> rank_by_field_ascending(const Session& session,
                                                 const FeatureSchema& schema,
                                                 const std::string& field_name,
                                                 rng::Engine& tie_break) {
  FieldRanker ranker("field", schema, field_name);
  return ranking_from_scores(ranker.scores(session), tie_break);
}

}  // namespace pcmc
