#include <benchmark/benchmark.h>

#include "fx42/model.hpp"
#include "fx42/pricing.hpp"

static void BM_FftBatch(benchmark::State& state) {
    const auto m = fx42::model::load_model(FX42_DATA_DIR "/table1_2010.json");
    const auto st = fx42::model::default_state(m);
    fx42::pricing::FftConfig cfg;
    cfg.n_points = static_cast<int>(state.range(0));
    std::vector<double> strikes{0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fx42::pricing::fft_call_prices(m, 0, 2, st, 1.0, cfg, strikes));
    }
}
BENCHMARK(BM_FftBatch)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_LeeQuadrature(benchmark::State& state) {
    const auto m = fx42::model::load_model(FX42_DATA_DIR "/table1_2010.json");
    const auto st = fx42::model::default_state(m);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx42::pricing::lee_call_price(m, 0, 2, st, 1.0, 1.0, -0.5));
    }
}
BENCHMARK(BM_LeeQuadrature)->Unit(benchmark::kMillisecond);
