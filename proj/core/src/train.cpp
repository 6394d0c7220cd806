#include "pcmc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pcmc/adam.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc {

namespace {

constexpr std::uint64_t kShuffleStream = 0xA11CE;
constexpr std::uint64_t kEpochStream = 0xE90C;
constexpr std::uint64_t kDropoutStream = 0xD409;
constexpr std::uint64_t kTrialStream = 0x5EA2C;

double mean_validation_nll(const PcmcNet& model, const Dataset& data,
                           std::span<const std::size_t> indices, std::size_t* underflows) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t idx : indices) sum += model.session_loss(data[idx], underflows);
  return sum / static_cast<double>(indices.size());
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded shuffle; the last 10% of the shuffled order is held out.
SplitIndices split_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Engine eng(rng::mix(seed, kShuffleStream));
  eng.shuffle(order);
  const std::size_t n_val = n / 10;
  SplitIndices split;
  split.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  split.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return split;
}

struct EpochOutcome {
  double train_nll = 0.0;
  std::size_t underflows = 0;
};

EpochOutcome run_epoch(PcmcNet& model, const Dataset& data,
                       std::span<const std::size_t> train_indices, int epoch,
                       autodiff::AdamState& adam, const autodiff::AdamConfig& adam_config,
                       std::uint64_t seed, std::uint64_t& step_counter) {
  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  rng::Engine eng(rng::mix(seed, rng::mix(kEpochStream, static_cast<std::uint64_t>(epoch))));
  eng.shuffle(order);

  const std::size_t batch_size = static_cast<std::size_t>(model.config().batch_size);
  EpochOutcome out;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    autodiff::Graph g(rng::mix(seed, rng::mix(kDropoutStream, step_counter)));
    ++step_counter;
    const PcmcNet::Bindings bindings = model.bind(g);

    std::vector<autodiff::Var> losses;
    std::size_t singular = 0;
    for (std::size_t k = start; k < end; ++k) {
      try {
        losses.push_back(
            model.build_loss(g, bindings, data[order[k]], /*train_mode=*/true, &out.underflows));
      } catch (const SingularSystemError&) {
        ++singular;
      }
    }
    if (losses.empty()) {
      throw NumericError("train: every session in the batch starting at " +
                         std::to_string(start) + " produced a singular system (epoch " +
                         std::to_string(epoch) + ", " + std::to_string(singular) + " failures)");
    }

    const autodiff::Var batch_loss = g.mean_of(losses);
    const double loss_value = g.scalar_value(batch_loss);
    if (!std::isfinite(loss_value)) {
      throw NumericError("train: non-finite batch loss at epoch " + std::to_string(epoch) +
                         ", batch starting at " + std::to_string(start));
    }
    loss_sum += loss_value * static_cast<double>(losses.size());
    loss_count += losses.size();

    g.backward(batch_loss);
    std::vector<Tensor> grads;
    grads.reserve(bindings.params.size());
    for (autodiff::Var p : bindings.params) grads.push_back(g.grad(p));
    adam_step(model.parameters(), grads, adam, adam_config);
  }

  out.train_nll = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  return out;
}

}  // namespace

TrainResult train_pcmc_net(const FeatureSchema& schema, const Dataset& data,
                           const ArchitectureConfig& config, const PcmcNet* warm_start) {
  config.validate();
  if (data.empty()) throw ValidationError("train: empty dataset");

  const SplitIndices split = split_dataset(data.size(), config.seed);

  PcmcNet model(schema, config);
  if (warm_start != nullptr) {
    if (schema_to_json(warm_start->schema()) != schema_to_json(schema)) {
      throw ValidationError("train: warm start schema does not match");
    }
    model.set_encoders(warm_start->individual_encoder(), warm_start->alternative_encoder());
    model.set_parameters(warm_start->parameters());
  } else {
    Dataset train_view;
    train_view.reserve(split.train.size());
    for (std::size_t idx : split.train) train_view.push_back(data[idx]);
    model.fit_encoders(train_view);
    model.init_parameters(config.seed);
  }

  autodiff::AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  autodiff::AdamState adam = autodiff::AdamState::init_like(model.parameters());

  TrainResult result{std::move(model), {}, std::numeric_limits<double>::infinity(), 0, 0, 0};

  double best_for_patience = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;
  std::vector<Tensor> best_params = result.model.parameters();
  std::uint64_t step_counter = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochOutcome epoch_out =
        run_epoch(result.model, data, split.train, epoch, adam, adam_config, config.seed,
                  step_counter);
    result.underflow_count += epoch_out.underflows;

    std::size_t val_underflows = 0;
    double val_nll = mean_validation_nll(result.model, data, split.validation, &val_underflows);
    if (std::isnan(val_nll)) val_nll = epoch_out.train_nll;  // no validation split
    result.underflow_count += val_underflows;

    const auto t1 = std::chrono::steady_clock::now();
    result.log.push_back({epoch, epoch_out.train_nll, val_nll,
                          std::chrono::duration<double>(t1 - t0).count()});
    result.stopped_epoch = epoch;

    if (val_nll < result.best_val_nll) {
      result.best_val_nll = val_nll;
      result.best_epoch = epoch;
      best_params = result.model.parameters();
    }
    if (val_nll < best_for_patience - config.min_delta) {
      best_for_patience = val_nll;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= config.patience) break;
    }
  }

  result.model.set_parameters(std::move(best_params));

  if (config.refit_on_full && result.best_epoch > 0) {
    ArchitectureConfig refit_config = config;
    refit_config.refit_on_full = false;
    refit_config.max_epochs = result.best_epoch;
    refit_config.patience = result.best_epoch + 1;  // no early stop in the refit

    PcmcNet refit(schema, refit_config);
    refit.fit_encoders(data);
    refit.init_parameters(refit_config.seed);
    autodiff::AdamState refit_adam = autodiff::AdamState::init_like(refit.parameters());
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    std::uint64_t refit_steps = 0;
    for (int epoch = 1; epoch <= refit_config.max_epochs; ++epoch) {
      EpochOutcome out = run_epoch(refit, data, all, epoch, refit_adam, adam_config,
                                   rng::mix(refit_config.seed, 0x2EF17), refit_steps);
      result.log.push_back({result.stopped_epoch + epoch, out.train_nll,
                            std::numeric_limits<double>::quiet_NaN(), 0.0});
    }
    result.model = std::move(refit);
  }

  return result;
}

void write_training_log_csv(const std::vector<EpochLog>& log,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log " + path.string());
  out << "epoch,train_nll,val_nll,seconds\n";
  out.precision(17);
  for (const EpochLog& e : log) {
    out << e.epoch << "," << e.train_nll << ",";
    if (std::isnan(e.val_nll)) {
      out << "";
    } else {
      out << e.val_nll;
    }
    out << "," << e.seconds << "\n";
  }
}

SearchResult random_search(const FeatureSchema& schema, const Dataset& data,
                           const SearchSpace& space, int budget,
                           const ArchitectureConfig& base, std::uint64_t seed) {
  if (budget < 1) throw ValidationError("random_search: budget must be >= 1");
  SearchResult result;
  for (int trial = 0; trial < budget; ++trial) {
    rng::Engine eng(rng::mix(seed, rng::mix(kTrialStream, static_cast<std::uint64_t>(trial))));
    ArchitectureConfig config = base;
    config.learning_rate = space.learning_rates[eng.uniform_index(space.learning_rates.size())];
    config.batch_size = space.batch_sizes[eng.uniform_index(space.batch_sizes.size())];
    config.hidden_layers = space.hidden_layers[eng.uniform_index(space.hidden_layers.size())];
    config.nodes_per_layer =
        space.nodes_per_layer[eng.uniform_index(space.nodes_per_layer.size())];
    config.activation = space.activations[eng.uniform_index(space.activations.size())];
    config.seed = rng::mix(seed, static_cast<std::uint64_t>(trial) + 1);

    TrainResult tr = train_pcmc_net(schema, data, config);
    result.leaderboard.push_back({trial, config, tr.best_val_nll, tr.best_epoch});
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const SearchTrial& a, const SearchTrial& b) {
                     return a.val_nll < b.val_nll;
                   });
  return result;
}

}  // namespace pcmc
