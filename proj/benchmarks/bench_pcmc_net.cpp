#include <benchmark/benchmark.h>

#include "pcmc/adam.hpp"
#include "pcmc/autodiff.hpp"
#include "pcmc/datagen.hpp"
#include "pcmc/pcmc_net.hpp"

namespace {

using namespace pcmc;

struct Fixture {
  Dataset data;
  PcmcNet net;

  explicit Fixture(std::size_t set_size, int nodes)
      : data(), net(datagen::airline_schema(), make_config(nodes)) {
    datagen::AirlineGenOptions options;
    options.n_sessions = 64;
    options.max_set_size = set_size;
    options.singleton_prob = 0.0;
    options.seed = 5;
    data = datagen::airline_synthetic(options);
    net.fit_encoders(data);
    net.init_parameters(5);
  }

  static ArchitectureConfig make_config(int nodes) {
    ArchitectureConfig config;
    config.hidden_layers = 2;
    config.nodes_per_layer = nodes;
    config.epsilon = 0.5;
    return config;
  }
};

void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 64);
  std::size_t i = 0;
  for (auto _ : state) {
    ChoiceDistribution pi = f.net.forward(f.data[i++ % f.data.size()]);
    benchmark::DoNotOptimize(pi.probs.data());
  }
}
BENCHMARK(BM_Forward)->Arg(5)->Arg(15)->Arg(30)->Arg(50);

void BM_TrainStep(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 64);
  autodiff::AdamState adam = autodiff::AdamState::init_like(f.net.parameters());
  autodiff::AdamConfig adam_config;
  std::size_t i = 0;
  for (auto _ : state) {
    autodiff::Graph g(i);
    const PcmcNet::Bindings b = f.net.bind(g);
    std::size_t underflows = 0;
    const autodiff::Var loss =
        f.net.build_loss(g, b, f.data[i++ % f.data.size()], true, &underflows);
    g.backward(loss);
    std::vector<Tensor> grads;
    for (autodiff::Var p : b.params) grads.push_back(g.grad(p));
    adam_step(f.net.parameters(), grads, adam, adam_config);
    benchmark::DoNotOptimize(f.net.parameters().data());
  }
}
BENCHMARK(BM_TrainStep)->Arg(5)->Arg(15)->Arg(30);

}  // namespace
