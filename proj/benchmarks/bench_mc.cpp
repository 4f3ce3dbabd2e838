#include <benchmark/benchmark.h>

#include "fx42/mc.hpp"
#include "fx42/model.hpp"

static void BM_SimulateMarket(benchmark::State& state) {
    const auto m = fx42::model::load_model(FX42_DATA_DIR "/table1_2010.json");
    fx42::mc::McConfig cfg;
    cfg.n_paths = static_cast<int>(state.range(0));
    cfg.horizon = 1.0;
    cfg.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fx42::mc::simulate_market(m, fx42::model::default_state(m), cfg));
    }
}
BENCHMARK(BM_SimulateMarket)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
