#include <benchmark/benchmark.h>

#include "imdp/config.hpp"
#include "imdp/experiments.hpp"
#include "imdp/scenario.hpp"

using namespace imdp;

namespace {

struct Setup {
  exp::ExperimentConfig cfg = exp::default_config();
  exp::Scenario scenario{exp::Task::Left, cfg.world, cfg.spawn};
  exp::Condition cond = exp::make_condition(cfg, scenario, cfg.teams[8]);  // night-fog
};

Setup& setup() {
  static Setup s;
  return s;
}

void BM_EvaluateSerial(benchmark::State& state) {
  auto& s = setup();
  const auto policy = manager::random_policy(2);
  for (auto _ : state) {
    auto eps = exp::evaluate_serial(s.cond, policy, s.cfg.seed, "night-fog", static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(eps.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvaluateParallel(benchmark::State& state) {
  auto& s = setup();
  const auto policy = manager::random_policy(2);
  for (auto _ : state) {
    auto eps = exp::evaluate_parallel(s.cond, policy, s.cfg.seed, "night-fog", static_cast<int>(state.range(0)),
                                      static_cast<int>(state.range(1)));
    benchmark::DoNotOptimize(eps.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EvaluateSerial)->Arg(250)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateParallel)->Args({250, 1})->Args({250, 2})->Args({250, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
