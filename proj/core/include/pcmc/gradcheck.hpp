#ifndef PCMC_GRADCHECK_HPP
#define PCMC_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace pcmc::gradcheck {

inline constexpr double kStep = 1e-5;  // central-difference step

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t comparisons = 0;
};

// Central finite-difference comparison for every autodiff primitive over
// seeded random inputs. The differences only ever evaluate forward passes,
// so they are independent of the backward implementation they check.
std::vector<CheckResult> check_primitives(std::uint64_t seed, int trials);

// End-to-end PCMC-Net loss (dropout disabled), every parameter entry.
CheckResult check_pcmc_net_loss(std::uint64_t seed, int trials);

double worst_error(const std::vector<CheckResult>& results);

}  // namespace pcmc::gradcheck

#endif
