#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <random>

#include "tsroute/harness.hpp"
#include "tsroute/kmeans.hpp"
#include "tsroute/parallel.hpp"
#include "tsroute/pricing.hpp"

namespace tsroute {
namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_ComparePolicies(benchmark::State& state) {
  const BernoulliSetup env{BernoulliEnv{{0.00627, 0.00943, 0.01976}, {}, {}, {}}, 16000, {"a", "b", "c"}};
  const std::vector<Policy> policies{Policy{"thompson", ThompsonPolicy{}},
                                     Policy{"random", UniformRandomPolicy{}}};
  MetricOptions opts;
  opts.posterior_samples = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compare_policies(policies, env, 16, 1, opts, mode(state)));
  }
  label(state);
}
BENCHMARK(BM_ComparePolicies)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AssignNearest(benchmark::State& state) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<Point> pts(100000, Point(8)), cents(16, Point(8));
  for (auto& p : pts) {
    for (auto& x : p) x = g(gen);
  }
  for (auto& c : cents) {
    for (auto& x : c) x = g(gen);
  }
  std::vector<std::size_t> out(pts.size());
  for (auto _ : state) {
    const double w = state.range(0) == 0 ? serial::assign_nearest(pts, cents, out) : assign_nearest(pts, cents, out);
    benchmark::DoNotOptimize(w);
  }
  label(state);
}
BENCHMARK(BM_AssignNearest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PriceSessions(benchmark::State& state) {
  GeneratorConfig g;
  g.n = 4000;
  g.feature_dim = 4;
  g.seed = 2;
  const auto sessions = generate_synthetic_sessions(g);
  const auto grid = PriceGrid::make(5.0, 20.0);
  MlpConfig cfg;
  cfg.epochs = 100;
  auto dnn = std::make_shared<DnnArm>(cfg, grid);
  Rng rng = make_stream(2, "training");
  dnn->fit(sessions, rng);
  auto gnb = std::make_shared<GnbArm>(LogisticPriceMap{5.0, 20.0, 10.0, NAN}, grid);
  gnb->fit(sessions);
  const std::vector<NamedArm> arms{{"dnn", dnn}, {"gnb", gnb}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(price_sessions(sessions, arms, mode(state)));
  }
  label(state);
}
BENCHMARK(BM_PriceSessions)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tsroute

BENCHMARK_MAIN();
