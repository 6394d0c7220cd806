#ifndef PCMC_EVALUATE_HPP
#define PCMC_EVALUATE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pcmc/choice.hpp"
#include "pcmc/model.hpp"
#include "pcmc/session.hpp"

namespace pcmc::eval {

inline constexpr double kProbFloor = 1e-30;
inline constexpr int kTieBreakDraws = 100;

struct EvalReport {
  std::string model_kind;
  std::size_t sessions = 0;
  double nll = 0.0;          // NaN for non-probabilistic rankers
  double top1 = 0.0;         // mean over kTieBreakDraws seeded tie-break draws
  double top5 = 0.0;
  double top1_single = 0.0;  // single draw at `seed`
  double top5_single = 0.0;
  std::array<double, 5> loss_quantiles{};  // min, q25, median, q75, max
  std::uint64_t seed = 0;
  std::size_t underflow_count = 0;
  std::string config_hash;

  std::string to_json() const;
};

// Mean negative log predicted probability of the realized choice; zero
// probabilities are floored at kProbFloor and counted.
double nll(const ChoiceModel& model, const Dataset& test, std::size_t* underflows = nullptr);

// TOP-N accuracy with seeded random tie-breaking (one draw).
double top_n(const ChoiceModel& model, const Dataset& test, int n, std::uint64_t seed);

EvalReport evaluate(const ChoiceModel& model, const Dataset& test, std::uint64_t seed,
                    int threads = 1);

// Monte Carlo estimate of E_c[ D_KL(oracle || model) ] with c uniform over
// [1,9]^2; both callables return 3-outcome distributions over {a, b, c}.
using ContextDist = std::function<ChoiceDistribution(double c1, double c2)>;
double expected_kl(const ContextDist& oracle, const ContextDist& model, std::size_t n_mc,
                   std::uint64_t seed);

// Preference-for-a-over-b map on a regular grid of c in [1,9]^2.
struct Heatmap {
  std::size_t resolution = 0;
  std::vector<double> values;  // row-major, row = c2 index, column = c1 index

  double at(std::size_t i, std::size_t j) const { return values[i * resolution + j]; }
  double min_value() const;
  double max_value() const;
};

Heatmap heatmap(const ContextDist& model, std::size_t resolution);

void write_heatmap_csv(const Heatmap& map, const std::filesystem::path& path);
// 8-bit grayscale PGM (P5, maxval 255), pixel = round(255 * preference);
// lighter shades mean higher preference for a.
void write_heatmap_pgm(const Heatmap& map, const std::filesystem::path& path);

}  // namespace pcmc::eval

#endif
