#ifndef PCMC_ADAM_HPP
#define PCMC_ADAM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "pcmc/tensor.hpp"

namespace pcmc::autodiff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second-moment accumulators, shaped like their parameters.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;

  static AdamState init_like(std::span<const Tensor> params);
};

// Standard bias-corrected Adam update, in place.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace pcmc::autodiff

#endif
