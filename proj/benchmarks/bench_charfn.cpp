#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "fx42/charfn.hpp"
#include "fx42/model.hpp"

using fx42::charfn::Complex;

static void BM_JointCf(benchmark::State& state) {
    const auto m = fx42::model::load_model(FX42_DATA_DIR "/table1_2010.json");
    const auto st = fx42::model::default_state(m);
    std::vector<Complex> zeta(3, Complex(0.0, 0.0));
    zeta[0] = Complex(20.0, 0.5);
    zeta[2] = Complex(-20.0, 0.5);
    const double tau = state.range(0) / 12.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx42::charfn::joint_cf(m, st, tau, zeta));
    }
}
BENCHMARK(BM_JointCf)->Arg(1)->Arg(12)->Arg(120);
