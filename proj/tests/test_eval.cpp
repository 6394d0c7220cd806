#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pcmc/baselines.hpp"
#include "pcmc/datagen.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/evaluate.hpp"
#include "pcmc/rng.hpp"

using namespace pcmc;
namespace fs = std::filesystem;

namespace {

Dataset fixed_size_sessions(std::size_t n_sessions, std::size_t size, std::uint64_t seed) {
  rng::Engine eng(seed);
  Dataset data;
  for (std::size_t k = 0; k < n_sessions; ++k) {
    Session s;
    for (std::size_t i = 0; i < size; ++i) {
      FeatureTuple alt;
      alt.numeric = {eng.uniform(1, 9), eng.uniform(1, 9)};
      s.alternatives.push_back(std::move(alt));
    }
    s.chosen_index = eng.uniform_index(size);
    data.push_back(std::move(s));
  }
  return data;
}

// Probabilistic stub with externally fixed probabilities per session.
class FixedModel : public ChoiceModel {
 public:
  FixedModel(FeatureSchema schema, std::vector<std::vector<double>> probs)
      : schema_(std::move(schema)), probs_(std::move(probs)) {}
  std::string kind() const override { return "fixed"; }
  const FeatureSchema& schema() const override { return schema_; }
  ChoiceDistribution predict(const Session& s) const override {
    return {probs_.at(next_index(s))};
  }

 private:
  // sessions are tagged through their first alternative's first numeric
  std::size_t next_index(const Session& s) const {
    return static_cast<std::size_t>(s.alternatives[0].numeric[0]);
  }
  FeatureSchema schema_;
  std::vector<std::vector<double>> probs_;
};

}  // namespace

TEST_CASE("uniform model NLL equals log set size exactly") {
  const Dataset data = fixed_size_sessions(100, 26, 3);
  const UniformModel uniform(datagen::context_schema());
  CHECK(eval::nll(uniform, data) == doctest::Approx(std::log(26.0)).epsilon(1e-12));
  // log 26 = 3.258..., near the paper's 3.24 on variable sizes
  CHECK(eval::nll(uniform, data) == doctest::Approx(3.2580965380214821).epsilon(1e-12));
}

TEST_CASE("nll formula on hand-picked probabilities") {
  FeatureSchema schema = datagen::context_schema();
  Dataset data;
  for (int k = 0; k < 2; ++k) {
    Session s;
    s.alternatives.resize(2);
    s.alternatives[0].numeric = {static_cast<double>(k), 1.0};
    s.alternatives[1].numeric = {2.0, 2.0};
    s.chosen_index = 0;
    data.push_back(s);
  }
  // truth probabilities 0.5 and 0.25 -> NLL = (log2 + log4)/2 = 1.5 log 2
  const FixedModel model(schema, {{0.5, 0.5}, {0.25, 0.75}});
  CHECK(eval::nll(model, data) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("perfect predictions give zero NLL") {
  FeatureSchema schema = datagen::context_schema();
  Dataset data;
  Session s;
  s.alternatives.resize(2);
  s.alternatives[0].numeric = {0.0, 1.0};
  s.alternatives[1].numeric = {2.0, 2.0};
  s.chosen_index = 0;
  data.push_back(s);
  const FixedModel model(schema, {{1.0, 0.0}});
  CHECK(eval::nll(model, data) == doctest::Approx(0.0));
}

TEST_CASE("zero probability is floored and counted") {
  FeatureSchema schema = datagen::context_schema();
  Dataset data;
  Session s;
  s.alternatives.resize(2);
  s.alternatives[0].numeric = {0.0, 1.0};
  s.alternatives[1].numeric = {2.0, 2.0};
  s.chosen_index = 1;
  data.push_back(s);
  const FixedModel model(schema, {{1.0, 0.0}});
  std::size_t underflows = 0;
  const double v = eval::nll(model, data, &underflows);
  CHECK(underflows == 1);
  CHECK(v == doctest::Approx(-std::log(1e-30)));
}

TEST_CASE("top-n hit positions") {
  FeatureSchema schema = datagen::context_schema();
  // scores rank truth 3rd of 10: top-5 hit, top-1 miss
  Dataset data;
  Session s;
  for (int i = 0; i < 10; ++i) {
    FeatureTuple alt;
    alt.numeric = {0.0, static_cast<double>(i)};
    s.alternatives.push_back(alt);
  }
  s.chosen_index = 0;
  data.push_back(s);
  std::vector<double> probs(10);
  probs[0] = 0.2;  // two higher scores exist
  probs[1] = 0.3;
  probs[2] = 0.25;
  double rest = 0.25 / 7;
  for (int i = 3; i < 10; ++i) probs[i] = rest;
  const FixedModel model(schema, {probs});
  CHECK(eval::top_n(model, data, 1, 7) == doctest::Approx(0.0));
  CHECK(eval::top_n(model, data, 5, 7) == doctest::Approx(1.0));
  // n >= set size is always a hit
  CHECK(eval::top_n(model, data, 10, 7) == doctest::Approx(1.0));
}

TEST_CASE("all-tied scores hit top-1 about 1/size of the time") {
  FeatureSchema schema = datagen::context_schema();
  const std::size_t size = 4;
  Dataset data = fixed_size_sessions(10000, size, 17);
  const UniformModel uniform(schema);
  const double hit = eval::top_n(uniform, data, 1, 23);
  CHECK(std::fabs(hit - 1.0 / static_cast<double>(size)) < 0.01);
}

TEST_CASE("evaluate report: monotone top-n, quantiles, determinism") {
  const Dataset data = fixed_size_sessions(500, 7, 29);
  const UniformModel uniform(datagen::context_schema());
  const eval::EvalReport a = eval::evaluate(uniform, data, 31);
  const eval::EvalReport b = eval::evaluate(uniform, data, 31);
  CHECK(a.top1 <= a.top5);
  CHECK(a.top1_single <= a.top5_single);
  CHECK(a.nll == doctest::Approx(std::log(7.0)));
  CHECK(a.loss_quantiles[0] == doctest::Approx(std::log(7.0)));
  CHECK(a.loss_quantiles[4] == doctest::Approx(std::log(7.0)));
  CHECK(a.top1 == b.top1);
  CHECK(a.top5 == b.top5);
  CHECK(a.nll == b.nll);

  // threaded evaluation reproduces the single-thread numbers
  const eval::EvalReport c = eval::evaluate(uniform, data, 31, 4);
  CHECK(c.nll == a.nll);
  CHECK(c.top1 == a.top1);

  const std::string json = a.to_json();
  CHECK(json.find("\"model_kind\": \"uniform\"") != std::string::npos);
  CHECK(json.find("\"top1\"") != std::string::npos);
}

TEST_CASE("expected KL of the oracle against itself is zero") {
  const eval::ContextDist oracle = [](double c1, double c2) {
    return datagen::context_oracle(c1, c2);
  };
  CHECK(eval::expected_kl(oracle, oracle, 200, 5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected KL against uniform matches the direct formula") {
  const eval::ContextDist fixed = [](double, double) {
    return ChoiceDistribution{{0.5, 0.3, 0.2}};
  };
  const eval::ContextDist uniform = [](double, double) {
    return ChoiceDistribution{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  };
  const double expected = 0.5 * std::log(0.5 * 3) + 0.3 * std::log(0.3 * 3) +
                          0.2 * std::log(0.2 * 3);
  CHECK(eval::expected_kl(fixed, uniform, 50, 7) == doctest::Approx(expected).epsilon(1e-12));
  // KL is nonnegative and zero only at equality
  CHECK(eval::expected_kl(fixed, uniform, 50, 7) > 0.0);
}

TEST_CASE("heatmap of an IIA model is constant; of the oracle is not") {
  const eval::ContextDist mnl_like = [](double, double) {
    return ChoiceDistribution{{0.45, 0.35, 0.2}};
  };
  const eval::Heatmap flat = eval::heatmap(mnl_like, 16);
  CHECK(flat.max_value() - flat.min_value() < 1e-10);

  const eval::ContextDist oracle = [](double c1, double c2) {
    return datagen::context_oracle(c1, c2);
  };
  const eval::Heatmap map = eval::heatmap(oracle, 32);
  CHECK(map.max_value() - map.min_value() > 0.05);

  // symmetric diagonal pixels sit at 1/2
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(map.at(i, i) == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("heatmap files: CSV layout and PGM encoding") {
  const eval::ContextDist oracle = [](double c1, double c2) {
    return datagen::context_oracle(c1, c2);
  };
  const eval::Heatmap map = eval::heatmap(oracle, 8);
  const fs::path dir = fs::temp_directory_path() / "pcmc_test_eval";
  fs::create_directories(dir);
  eval::write_heatmap_csv(map, dir / "map.csv");
  eval::write_heatmap_pgm(map, dir / "map.pgm");

  std::ifstream csv(dir / "map.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("c2\\c1,1,", 0) == 0);
  std::size_t rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 8);

  std::ifstream pgm(dir / "map.pgm", std::ios::binary);
  std::string magic;
  pgm >> magic;
  CHECK(magic == "P5");
  std::size_t w, h, maxval;
  pgm >> w >> h >> maxval;
  CHECK(w == 8);
  CHECK(h == 8);
  CHECK(maxval == 255);
  pgm.get();  // single whitespace after the header
  std::vector<unsigned char> pixels(64);
  pgm.read(reinterpret_cast<char*>(pixels.data()), 64);
  REQUIRE(pgm.gcount() == 64);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(pixels[i] ==
          static_cast<unsigned char>(std::lround(255.0 * map.values[i])));
  }
}

TEST_CASE("evaluate rejects empty input and non-probabilistic NLL") {
  const UniformModel uniform(datagen::context_schema());
  CHECK_THROWS_AS(eval::nll(uniform, Dataset{}), ValidationError);
  const FieldRanker cheapest("cheapest", datagen::airline_schema(), "price");
  const Dataset data = fixed_size_sessions(3, 2, 5);
  CHECK_THROWS_AS(eval::nll(cheapest, data), ValidationError);
}
