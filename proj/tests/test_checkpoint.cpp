#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pcmc/baselines.hpp"
#include "pcmc/checkpoint.hpp"
#include "pcmc/datagen.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/rng.hpp"

using namespace pcmc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "pcmc_test_checkpoint";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("pcmc-net checkpoints round-trip losslessly") {
  datagen::AirlineGenOptions options;
  options.n_sessions = 40;
  options.max_set_size = 5;
  options.seed = 3;
  const Dataset data = datagen::airline_synthetic(options);

  ArchitectureConfig config;
  config.hidden_layers = 2;
  config.nodes_per_layer = 8;
  config.dropout = 0.5;
  config.seed = 17;
  PcmcNet net(datagen::airline_schema(), config);
  net.fit_encoders(data);
  net.init_parameters(17);

  const fs::path path = temp_dir() / "net.json";
  save_pcmc_net(net, path);
  const PcmcNet back = load_pcmc_net(path);

  REQUIRE(back.parameters().size() == net.parameters().size());
  for (std::size_t k = 0; k < net.parameters().size(); ++k) {
    const Tensor& a = net.parameters()[k];
    const Tensor& b = back.parameters()[k];
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bitwise
  }

  // forward parity on fresh sessions
  for (std::size_t k = 0; k < 5; ++k) {
    const ChoiceDistribution pa = net.forward(data[k]);
    const ChoiceDistribution pb = back.forward(data[k]);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.probs[i] == pb.probs[i]);
  }
  CHECK(checkpoint_kind(path) == "pcmcnet");
}

TEST_CASE("embedding tables reserve the out-of-vocabulary row") {
  const Dataset data = datagen::sample_rps_sessions(0.75, 30, 5);
  ArchitectureConfig config;
  config.hidden_layers = 1;
  config.nodes_per_layer = 4;
  PcmcNet net(datagen::rps_schema(), config);
  net.fit_encoders(data);
  net.init_parameters(5);
  // single categorical field of cardinality 3 -> table rows = 4
  CHECK(net.parameters()[0].rows() == 4);
}

TEST_CASE("mnl checkpoints round-trip") {
  const Dataset data = datagen::sample_rps_sessions(0.7, 500, 7);
  const MnlFitResult fit = fit_mnl(datagen::rps_schema(), data, {});
  const fs::path path = temp_dir() / "mnl.json";
  save_mnl(fit.model, path);
  const MnlModel back = load_mnl(path);
  CHECK(back.weights() == fit.model.weights());
  const ChoiceDistribution pa = fit.model.predict(data[0]);
  const ChoiceDistribution pb = back.predict(data[0]);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.probs[i] == pb.probs[i]);
}

TEST_CASE("pcmc-mle checkpoints round-trip and refuse unseen items") {
  const RateMatrix q = datagen::random_pcmc(4, 11);
  const std::vector<std::string> levels{"item0", "item1", "item2", "item3"};
  const PcmcMleModel model(datagen::indexed_schema(4), q, levels);

  const fs::path path = temp_dir() / "mle.json";
  save_mle(model, path);
  const PcmcMleModel back = load_mle(path);
  CHECK(back.rate_matrix().rates == q.rates);

  Session s;
  FeatureTuple a, b;
  a.categorical = {"item0"};
  b.categorical = {"item2"};
  s.alternatives = {a, b};
  s.chosen_index = 0;
  const ChoiceDistribution pi = back.predict(s);
  CHECK(pi.size() == 2);

  Session unseen = s;
  unseen.alternatives[0].categorical = {"item9"};
  CHECK_THROWS_AS(back.predict(unseen), ValidationError);
}

TEST_CASE("ranker checkpoints load behind the common surface") {
  const fs::path path = temp_dir() / "uniform.json";
  save_ranker("uniform", datagen::airline_schema(), path);
  const auto model = load_any_model(path);
  CHECK(model->kind() == "uniform");
  CHECK(model->probabilistic());

  const fs::path cheap = temp_dir() / "cheapest.json";
  save_ranker("cheapest", datagen::airline_schema(), cheap);
  const auto ranker = load_any_model(cheap);
  CHECK(ranker->kind() == "cheapest");
  CHECK_FALSE(ranker->probabilistic());

  CHECK_THROWS_AS(save_ranker("fanciest", datagen::airline_schema(), path), ValidationError);
}

TEST_CASE("kind mismatches and missing files are rejected") {
  const fs::path path = temp_dir() / "uniform2.json";
  save_ranker("uniform", datagen::airline_schema(), path);
  CHECK_THROWS_AS(load_pcmc_net(path), ValidationError);
  CHECK_THROWS_AS(load_any_model(temp_dir() / "nope.json"), IoError);
}
