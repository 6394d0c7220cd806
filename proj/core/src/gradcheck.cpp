#include "pcmc/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "pcmc/autodiff.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/pcmc_net.hpp"
#include "pcmc/rng.hpp"

namespace pcmc::gradcheck {

namespace {

using autodiff::Graph;
using autodiff::Var;

double rel_error(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Builds a scalar-valued function of the given input tensors.
using Builder = std::function<Var(Graph&, const std::vector<Var>&)>;

// Compares reverse-mode gradients against central differences; the
// difference quotients rerun only forward passes.
double check_case(const Builder& build, std::vector<Tensor> inputs, std::uint64_t graph_seed,
                  std::size_t* comparisons) {
  const auto forward_value = [&](const std::vector<Tensor>& xs) {
    Graph g(graph_seed);
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const Tensor& x : xs) vars.push_back(g.constant(x));
    return g.scalar_value(build(g, vars));
  };

  Graph g(graph_seed);
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& x : inputs) vars.push_back(g.parameter(x));
  const Var out = build(g, vars);
  g.backward(out);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& grad = g.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> probe = inputs;
      probe[k][i] = inputs[k][i] + kStep;
      const double up = forward_value(probe);
      probe[k][i] = inputs[k][i] - kStep;
      const double down = forward_value(probe);
      const double fd = (up - down) / (2.0 * kStep);
      worst = std::max(worst, rel_error(grad[i], fd));
      if (comparisons != nullptr) ++(*comparisons);
    }
  }
  return worst;
}

Tensor random_tensor(rng::Engine& eng, std::size_t r, std::size_t c, double lo, double hi,
                     double keep_away_from = std::numeric_limits<double>::quiet_NaN(),
                     double margin = 0.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = eng.uniform(lo, hi);
    if (!std::isnan(keep_away_from)) {
      while (std::fabs(v - keep_away_from) < margin) v = eng.uniform(lo, hi);
    }
    t[i] = v;
  }
  return t;
}

// Final reduction to a scalar with fixed pseudo-random weights (derived
// from a per-case seed so every rebuild sees the same weights); this makes
// the check exercise the whole Jacobian.
Var reduce(Graph& g, Var x, std::uint64_t wseed) {
  rng::Engine eng(wseed);
  std::vector<double> w(g.value(x).size());
  for (double& v : w) v = eng.uniform(-1.0, 1.0);
  return g.dot_const(x, std::move(w));
}

}  // namespace

std::vector<CheckResult> check_primitives(std::uint64_t seed, int trials) {
  // Kinked ops keep their inputs away from the kink; the subgradient there
  // is a convention, not something finite differences can confirm.
  const double kKinkMargin = 1e-3;

  struct Case {
    std::string name;
    std::function<double(rng::Engine&, std::size_t*)> run;
  };

  std::vector<Case> cases;

  cases.push_back({"add", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, -2, 2),
                                            random_tensor(eng, 3, 4, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.add(v[0], v[1]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"add_row_vector", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, -2, 2),
                                            random_tensor(eng, 1, 4, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.add_row_vector(v[0], v[1]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"matmul", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, -2, 2),
                                            random_tensor(eng, 4, 2, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.matmul(v[0], v[1]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"concat", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 2, -2, 2),
                                            random_tensor(eng, 3, 3, -2, 2),
                                            random_tensor(eng, 3, 1, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.concat_cols(v), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"embedding_lookup", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 5, 3, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.embedding_lookup(v[0], {2, 0, 4, 2}), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"relu", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{
                         random_tensor(eng, 3, 4, -2, 2, 0.0, kKinkMargin)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.relu(v[0]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"leaky_relu", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{
                         random_tensor(eng, 3, 4, -2, 2, 0.0, kKinkMargin)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.leaky_relu(v[0], 0.01), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"sigmoid", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.sigmoid(v[0]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"tanh", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.tanh(v[0]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"dropout", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 4, 4, -2, 2)};
                     const std::uint64_t wseed = eng.next_u64();
                     const std::uint64_t graph_seed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.dropout(v[0], 0.3, true), wseed);
                         },
                         std::move(in), graph_seed, n);
                   }});

  cases.push_back({"clamp_min_zero_plus_const", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{
                         random_tensor(eng, 3, 4, -2, 2, 0.0, kKinkMargin)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.clamp_min_zero_plus_const(v[0], 0.5), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"row_neg_sum_diagonal", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 12, 1, 0.1, 2.0)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(
                               g, g.row_neg_sum_diagonal(g.off_diagonal_from_pairs(v[0], 4)),
                               wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"linear_solve", [=](rng::Engine& eng, std::size_t* n) {
                     Tensor a = random_tensor(eng, 4, 4, -1, 1);
                     for (std::size_t i = 0; i < 4; ++i) a(i, i) += 5.0;  // well conditioned
                     std::vector<Tensor> in{std::move(a), random_tensor(eng, 1, 4, -1, 1)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.linear_solve(v[0], v[1]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"log", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, 0.5, 2.0)};
                     const std::uint64_t wseed = eng.next_u64();
                     return check_case(
                         [wseed](Graph& g, const std::vector<Var>& v) {
                           return reduce(g, g.log(v[0]), wseed);
                         },
                         std::move(in), 0, n);
                   }});

  cases.push_back({"pick_floor_scale_mean", [=](rng::Engine& eng, std::size_t* n) {
                     std::vector<Tensor> in{random_tensor(eng, 3, 4, 0.5, 2.0)};
                     return check_case(
                         [](Graph& g, const std::vector<Var>& v) {
                           const Var a = g.scale(g.floor_at(g.pick(v[0], 1, 2), 0.1), -1.0);
                           const Var b = g.pick(v[0], 0, 0);
                           const std::vector<Var> parts{a, b};
                           return g.mean_of(parts);
                         },
                         std::move(in), 0, n);
                   }});

  std::vector<CheckResult> results;
  for (const Case& c : cases) {
    CheckResult r;
    r.name = c.name;
    for (int t = 0; t < trials; ++t) {
      rng::Engine eng(rng::mix(seed, rng::mix(std::hash<std::string>{}(c.name), t)));
      r.max_rel_error = std::max(r.max_rel_error, c.run(eng, &r.comparisons));
    }
    results.push_back(std::move(r));
  }
  return results;
}

CheckResult check_pcmc_net_loss(std::uint64_t seed, int trials) {
  CheckResult result;
  result.name = "pcmc_net_loss";

  FeatureSchema schema;
  schema.individual_fields.push_back({"segment", FieldKind::categorical, 3, 0.0, 0.0});
  schema.individual_fields.push_back({"budget", FieldKind::numeric, 0, 0.0, 1.0});
  schema.alternative_fields.push_back({"brand", FieldKind::categorical, 4, 0.0, 0.0});
  schema.alternative_fields.push_back({"price", FieldKind::numeric, 0, 0.0, 1.0});
  schema.alternative_fields.push_back({"quality", FieldKind::numeric, 0, 0.0, 1.0});

  for (int t = 0; t < trials; ++t) {
    rng::Engine eng(rng::mix(seed, rng::mix(0xE2E, static_cast<std::uint64_t>(t))));

    Dataset data;
    Session s;
    s.individual.categorical.push_back("seg" + std::to_string(eng.uniform_index(3)));
    s.individual.numeric.push_back(eng.uniform(0.0, 1.0));
    for (int a = 0; a < 3; ++a) {
      FeatureTuple alt;
      alt.categorical.push_back("brand" + std::to_string(eng.uniform_index(4)));
      alt.numeric.push_back(eng.uniform(0.0, 1.0));
      alt.numeric.push_back(eng.uniform(0.0, 1.0));
      s.alternatives.push_back(std::move(alt));
    }
    s.chosen_index = eng.uniform_index(3);
    data.push_back(s);

    ArchitectureConfig config;
    config.hidden_layers = 2;
    config.nodes_per_layer = 4;
    config.activation = Activation::leaky_relu;
    config.epsilon = 0.5;
    config.dropout = 0.0;
    PcmcNet net(schema, config);
    net.fit_encoders(data);
    net.init_parameters(eng.next_u64());

    const auto loss_value = [&]() {
      autodiff::Graph g;
      const PcmcNet::Bindings b = net.bind(g);
      return g.scalar_value(net.build_loss(g, b, s, /*train_mode=*/false));
    };

    autodiff::Graph g;
    const PcmcNet::Bindings bindings = net.bind(g);
    const autodiff::Var loss = net.build_loss(g, bindings, s, /*train_mode=*/false);
    g.backward(loss);

    std::vector<Tensor>& params = net.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Tensor& grad = g.grad(bindings.params[k]);
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        const double saved = params[k][i];
        params[k][i] = saved + kStep;
        const double up = loss_value();
        params[k][i] = saved - kStep;
        const double down = loss_value();
        params[k][i] = saved;
        const double fd = (up - down) / (2.0 * kStep);
        result.max_rel_error = std::max(result.max_rel_error, rel_error(grad[i], fd));
        ++result.comparisons;
      }
    }
  }
  return result;
}

double worst_error(const std::vector<CheckResult>& results) {
  double worst = 0.0;
  for (const CheckResult& r : results) worst = std::max(worst, r.max_rel_error);
  return worst;
}

}  // namespace pcmc::gradcheck
