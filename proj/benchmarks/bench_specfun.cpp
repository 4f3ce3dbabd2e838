#include <benchmark/benchmark.h>

#include "fx42/specfun.hpp"

using fx42::specfun::Complex;

static void BM_LnGammaComplex(benchmark::State& state) {
    Complex z(2.5, 1.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx42::specfun::ln_gamma(z));
    }
}
BENCHMARK(BM_LnGammaComplex);

static void BM_Hyp1f1(benchmark::State& state) {
    const Complex a(1.2, 0.4), b(2.3, 0.0);
    const Complex z(static_cast<double>(state.range(0)), 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx42::specfun::hyp1f1(a, b, z));
    }
}
BENCHMARK(BM_Hyp1f1)->Arg(5)->Arg(50)->Arg(300);

static void BM_RegLowerIncGamma(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx42::specfun::reg_lower_inc_gamma(0.0319, 0.0245));
    }
}
BENCHMARK(BM_RegLowerIncGamma);
