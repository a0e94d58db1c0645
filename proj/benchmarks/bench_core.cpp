#include <benchmark/benchmark.h>

#include <cmath>

#include "gossipfield/fluidity.hpp"
#include "gossipfield/generators.hpp"
#include "gossipfield/moments.hpp"
#include "gossipfield/simulate.hpp"

using namespace gossipfield;

namespace {

SocialNetwork er_network(std::size_t n, double trust) {
  GraphRecipe r;
  r.family = GraphFamily::kErdosRenyi;
  r.n = n;
  r.p = 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
  r.seed = 1;
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 2;
  const auto g = generate(r);
  const std::vector<double> beliefs{0.0, 1.0};
  return build_canonical(g.graph, g.stubborn, beliefs, trust);
}

void BM_HittingGamma(benchmark::State& state) {
  const auto net = er_network(static_cast<std::size_t>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hitting_gamma(net).gamma.data());
}
BENCHMARK(BM_HittingGamma)->Arg(200)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_SecondMoments(benchmark::State& state) {
  const auto net = er_network(static_cast<std::size_t>(state.range(0)), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(second_moments(net).variance.data());
}
BENCHMARK(BM_SecondMoments)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_ForwardEvents(benchmark::State& state) {
  const auto net = er_network(static_cast<std::size_t>(state.range(0)), 0.5);
  const auto x0 = initial_beliefs(net, 0.5);
  const ForwardSimulator sim(net);
  std::uint64_t seed = 0;
  std::uint64_t events = 0;
  for (auto _ : state) {
    const auto out = sim.run(x0, 100.0, ++seed);
    events += out.final_state.events;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ForwardEvents)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BackwardSample(benchmark::State& state) {
  const auto net = er_network(100, 0.5);
  const BackwardSampler sampler(net);
  CounterRng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(1e-8, rng).beliefs.data());
}
BENCHMARK(BM_BackwardSample)->Unit(benchmark::kMillisecond);

void BM_MixingTime(benchmark::State& state) {
  const auto net = er_network(static_cast<std::size_t>(state.range(0)), 1.0);
  const auto ext = reversible_extension(net);
  for (auto _ : state) benchmark::DoNotOptimize(mixing_time(ext.jump).tau);
}
BENCHMARK(BM_MixingTime)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
