#ifndef PCMC_TRAIN_HPP
#define PCMC_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcmc/pcmc_net.hpp"

namespace pcmc {

struct EpochLog {
  int epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  PcmcNet model;
  std::vector<EpochLog> log;
  double best_val_nll = 0.0;
  int best_epoch = 0;     // 1-based epoch of the returned checkpoint
  int stopped_epoch = 0;  // last epoch that ran
  std::size_t underflow_count = 0;
};

// Mini-batch Adam training with a seeded 10% validation split, early
// stopping on validation NLL, and the best-validation weights returned.
// A warm start continues from an existing model's encoders and weights
// (fresh optimizer state) instead of initializing from the seed.
TrainResult train_pcmc_net(const FeatureSchema& schema, const Dataset& data,
                           const ArchitectureConfig& config,
                           const PcmcNet* warm_start = nullptr);

void write_training_log_csv(const std::vector<EpochLog>& log,
                            const std::filesystem::path& path);

// Seeded random hyperparameter search over the standard ranges.
struct SearchSpace {
  std::vector<double> learning_rates{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<int> batch_sizes{1, 2, 4, 8, 16};
  std::vector<int> hidden_layers{1, 2, 3};
  std::vector<int> nodes_per_layer{32, 64, 128, 256, 512};
  std::vector<Activation> activations{Activation::relu, Activation::sigmoid,
                                      Activation::tanh, Activation::leaky_relu};
};

struct SearchTrial {
  int trial = 0;
  ArchitectureConfig config;
  double val_nll = 0.0;
  int best_epoch = 0;
};

struct SearchResult {
  std::vector<SearchTrial> leaderboard;  // sorted by validation NLL
};

SearchResult random_search(const FeatureSchema& schema, const Dataset& data,
                           const SearchSpace& space, int budget,
                           const ArchitectureConfig& base, std::uint64_t seed);

}  // namespace pcmc

#endif
