#include "pcmc/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

namespace pcmc::eval {

namespace {

constexpr std::uint64_t kTieStream = 0x7E1;
constexpr std::uint64_t kKlStream = 0x6B1;

// Rank of the chosen alternative under seeded random tie-breaking.
std::size_t chosen_rank(const std::vector<double>& scores, std::size_t chosen,
                        std::uint64_t seed) {
  rng::Engine eng(seed);
  std::vector<double> priority(scores.size());
  for (double& p : priority) p = eng.uniform();
  std::size_t rank = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == chosen) continue;
    if (scores[j] > scores[chosen] ||
        (scores[j] == scores[chosen] && priority[j] > priority[chosen])) {
      ++rank;
    }
  }
  return rank;
}

}  // namespace

double nll(const ChoiceModel& model, const Dataset& test, std::size_t* underflows) {
  if (test.empty()) throw ValidationError("nll: empty test set");
  if (!model.probabilistic()) {
    throw ValidationError("nll: model '" + model.kind() + "' is non-probabilistic");
  }
  double sum = 0.0;
  for (const Session& s : test) {
    double p = model.predict(s).probs[s.chosen_index];
    if (p < kProbFloor) {
      if (underflows != nullptr) ++(*underflows);
      p = kProbFloor;
    }
    sum += -std::log(p);
  }
  return sum / static_cast<double>(test.size());
}

double top_n(const ChoiceModel& model, const Dataset& test, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("top_n: n must be >= 1");
  if (test.empty()) throw ValidationError("top_n: empty test set");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const std::vector<double> scores = model.scores(test[k]);
    const std::size_t rank =
        chosen_rank(scores, test[k].chosen_index, rng::mix(seed, rng::mix(kTieStream, k)));
    if (rank < static_cast<std::size_t>(n)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

EvalReport evaluate(const ChoiceModel& model, const Dataset& test, std::uint64_t seed,
                    int threads) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  EvalReport report;
  report.model_kind = model.kind();
  report.sessions = test.size();
  report.seed = seed;

  const bool probabilistic = model.probabilistic();

  // Per-session scores and losses, chunked deterministically across workers.
  std::vector<std::vector<double>> scores(test.size());
  std::vector<double> losses(test.size(), 0.0);
  std::vector<std::size_t> underflows_per(test.size(), 0);

  const int n_workers = std::max(1, threads);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= test.size()) break;
      if (probabilistic) {
        const ChoiceDistribution dist = model.predict(test[k]);
        scores[k] = dist.probs;
        double p = dist.probs[test[k].chosen_index];
        if (p < kProbFloor) {
          underflows_per[k] = 1;
          p = kProbFloor;
        }
        losses[k] = -std::log(p);
      } else {
        scores[k] = model.scores(test[k]);
      }
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  if (probabilistic) {
    double sum = 0.0;
    for (double l : losses) sum += l;
    report.nll = sum / static_cast<double>(test.size());
    for (std::size_t u : underflows_per) report.underflow_count += u;

    std::vector<double> sorted = losses;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    report.loss_quantiles = {sorted.front(), quantile(0.25), quantile(0.5), quantile(0.75),
                             sorted.back()};
  } else {
    report.nll = std::numeric_limits<double>::quiet_NaN();
    report.loss_quantiles.fill(std::numeric_limits<double>::quiet_NaN());
  }

  // TOP-N: single draw at `seed` plus the mean over kTieBreakDraws draws.
  const auto top_from_scores = [&](int n, std::uint64_t draw_seed) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
      const std::size_t rank = chosen_rank(scores[k], test[k].chosen_index,
                                           rng::mix(draw_seed, rng::mix(kTieStream, k)));
      if (rank < static_cast<std::size_t>(n)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
  };
  report.top1_single = top_from_scores(1, seed);
  report.top5_single = top_from_scores(5, seed);
  double t1 = 0.0, t5 = 0.0;
  for (int d = 0; d < kTieBreakDraws; ++d) {
    const std::uint64_t ds = rng::mix(seed, static_cast<std::uint64_t>(d) + 1);
    t1 += top_from_scores(1, ds);
    t5 += top_from_scores(5, ds);
  }
  report.top1 = t1 / kTieBreakDraws;
  report.top5 = t5 / kTieBreakDraws;
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json o;
  o["model_kind"] = model_kind;
  o["sessions"] = sessions;
  if (std::isnan(nll)) {
    o["nll"] = nullptr;  // the "--" cells of non-probabilistic rankers
  } else {
    o["nll"] = nll;
  }
  o["top1"] = top1;
  o["top5"] = top5;
  o["top1_single"] = top1_single;
  o["top5_single"] = top5_single;
  if (!std::isnan(loss_quantiles[0])) {
    o["loss_quantiles"] = loss_quantiles;
  }
  o["seed"] = seed;
  o["underflow_count"] = underflow_count;
  if (!config_hash.empty()) o["config_hash"] = config_hash;
  return o.dump(2);
}

double expected_kl(const ContextDist& oracle, const ContextDist& model, std::size_t n_mc,
                   std::uint64_t seed) {
  if (n_mc == 0) throw ValidationError("expected_kl: need n_mc >= 1");
  rng::Engine eng(rng::mix(seed, kKlStream));
  double sum = 0.0;
  for (std::size_t t = 0; t < n_mc; ++t) {
    const double c1 = eng.uniform(1.0, 9.0);
    const double c2 = eng.uniform(1.0, 9.0);
    const ChoiceDistribution p = oracle(c1, c2);
    const ChoiceDistribution q = model(c1, c2);
    if (p.size() != 3 || q.size() != 3) {
      throw ValidationError("expected_kl: distributions must have 3 outcomes");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (p.probs[i] <= 0.0) continue;
      sum += p.probs[i] * std::log(p.probs[i] / std::max(q.probs[i], kProbFloor));
    }
  }
  return sum / static_cast<double>(n_mc);
}

double Heatmap::min_value() const {
  return *std::min_element(values.begin(), values.end());
}
double Heatmap::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

Heatmap heatmap(const ContextDist& model, std::size_t resolution) {
  if (resolution < 2) throw ValidationError("heatmap: resolution must be >= 2");
  Heatmap map;
  map.resolution = resolution;
  map.values.resize(resolution * resolution);
  const double step = 8.0 / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double c2 = 1.0 + step * static_cast<double>(i);
    for (std::size_t j = 0; j < resolution; ++j) {
      const double c1 = 1.0 + step * static_cast<double>(j);
      const ChoiceDistribution dist = model(c1, c2);
      map.values[i * resolution + j] = dist.probs[0] / (dist.probs[0] + dist.probs[1]);
    }
  }
  return map;
}

void write_heatmap_csv(const Heatmap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write heatmap CSV " + path.string());
  out.precision(17);
  const double step = 8.0 / static_cast<double>(map.resolution - 1);
  out << "c2\\c1";
  for (std::size_t j = 0; j < map.resolution; ++j) {
    out << "," << 1.0 + step * static_cast<double>(j);
  }
  out << "\n";
  for (std::size_t i = 0; i < map.resolution; ++i) {
    out << 1.0 + step * static_cast<double>(i);
    for (std::size_t j = 0; j < map.resolution; ++j) out << "," << map.at(i, j);
    out << "\n";
  }
}

void write_heatmap_pgm(const Heatmap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write heatmap PGM " + path.string());
  out << "P5\n" << map.resolution << " " << map.resolution << "\n255\n";
  for (double v : map.values) {
    const int pixel = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    out.put(static_cast<char>(pixel));
  }
}

}  // namespace pcmc::eval
