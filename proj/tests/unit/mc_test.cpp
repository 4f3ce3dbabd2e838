#include <doctest.h>

#include <cmath>
#include <vector>

#include "fx42/mc.hpp"
#include "fx42/pricing.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace fx42;
using mc::McConfig;
using mc::Scheme;

namespace {
const cir::CirFactor kFactor{1.2, 0.35, 0.55, 0.25, -0.6};
}

TEST_CASE("factor paths hit the closed-form moments") {
    McConfig cfg;
    cfg.dt = 1.0 / 256.0;
    cfg.horizon = 10.0;
    cfg.n_paths = 100000;
    cfg.seed = 17;
    cfg.scheme = Scheme::ExactTransition;
    const auto paths = mc::simulate_cir(kFactor, cfg);
    const int last = static_cast<int>(paths.times.size()) - 1;
    std::vector<double> terminal(cfg.n_paths);
    for (int p = 0; p < cfg.n_paths; ++p) terminal[p] = paths.at(p, last);
    const auto est = oracles::mean_se(terminal);

    const auto& f = kFactor;
    const double ekt = std::exp(-f.kappa * cfg.horizon);
    const double mean = f.theta + (f.v0 - f.theta) * ekt;
    CHECK(std::abs(est.mean - mean) < 3.0 * est.se);

    // second moment against the closed-form variance
    const double var = f.v0 * f.sigma * f.sigma / f.kappa * (ekt - ekt * ekt) +
                       f.theta * f.sigma * f.sigma / (2.0 * f.kappa) * (1.0 - ekt) * (1.0 - ekt);
    double sample_var = 0.0;
    for (double v : terminal) sample_var += (v - est.mean) * (v - est.mean);
    sample_var /= (cfg.n_paths - 1.0);
    // s.e. of a sample variance ~ var sqrt(2/n) for near-Gaussian data; allow
    // generous room for the chi-square skew
    CHECK(std::abs(sample_var - var) < 6.0 * var * std::sqrt(2.0 / cfg.n_paths));
}

TEST_CASE("full-truncation Euler agrees with the exact transition in distribution") {
    McConfig cfg;
    cfg.dt = 1.0 / 512.0;
    cfg.horizon = 2.0;
    cfg.n_paths = 60000;
    cfg.seed = 23;
    const auto euler = mc::simulate_cir(kFactor, cfg);
    cfg.scheme = Scheme::ExactTransition;
    const auto exact = mc::simulate_cir(kFactor, cfg);
    const int last = static_cast<int>(euler.times.size()) - 1;
    std::vector<double> a(cfg.n_paths), b(cfg.n_paths);
    for (int p = 0; p < cfg.n_paths; ++p) {
        a[p] = euler.at(p, last);
        b[p] = exact.at(p, last);
    }
    const auto ea = oracles::mean_se(a);
    const auto eb = oracles::mean_se(b);
    CHECK(std::abs(ea.mean - eb.mean) < 3.0 * std::sqrt(ea.se * ea.se + eb.se * eb.se) + 1e-3);
}

TEST_CASE("one-shot terminal sampler is invariant to any dt and matches the chain") {
    // the sampler takes no step size at all, so two calls are bit-identical
    const auto s1 = mc::sample_cir_terminal(kFactor, 3.0, 5000, 99);
    const auto s2 = mc::sample_cir_terminal(kFactor, 3.0, 5000, 99);
    CHECK(s1 == s2);
    // and it reproduces the closed-form mean
    const auto est = oracles::mean_se(s1);
    const double mean =
        kFactor.theta + (kFactor.v0 - kFactor.theta) * std::exp(-kFactor.kappa * 3.0);
    CHECK(std::abs(est.mean - mean) < 3.0 * est.se);
}

TEST_CASE("seed determinism: identical seed gives bit-identical paths") {
    const auto m = testdata::table1();
    McConfig cfg;
    cfg.dt = 1.0 / 64.0;
    cfg.horizon = 0.5;
    cfg.n_paths = 200;
    cfg.seed = 7;
    cfg.store_dt = 0.25;
    const auto b1 = mc::simulate_market(m, model::default_state(m), cfg);
    const auto b2 = mc::simulate_market(m, model::default_state(m), cfg);
    CHECK(b1.Y == b2.Y);
    CHECK(b1.V == b2.V);
    CHECK(b1.Bhat == b2.Bhat);
    CHECK(b1.QV == b2.QV);
    // and is independent of the thread partition
    McConfig cfg3 = cfg;
    cfg3.n_threads = 3;
    const auto b3 = mc::simulate_market(m, model::default_state(m), cfg3);
    CHECK(b1.Y == b3.Y);
}

TEST_CASE("market paths: structural identities") {
    auto m = testdata::table1();
    McConfig cfg;
    cfg.dt = 1.0 / 128.0;
    cfg.horizon = 1.0;
    cfg.n_paths = 64;
    cfg.seed = 31;
    cfg.store_dt = 0.125;
    SUBCASE("exchange-rate reciprocity holds at every grid point") {
        const auto b = mc::simulate_market(m, model::default_state(m), cfg);
        for (int p = 0; p < b.n_paths; ++p) {
            for (int t = 0; t < b.n_times(); ++t) {
                const double s01 = std::exp(b.y(p, t, 0) - b.y(p, t, 1));
                const double s10 = std::exp(b.y(p, t, 1) - b.y(p, t, 0));
                CHECK(s01 * s10 == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("zero projections make the GOP deterministic and Bhat constant") {
        for (auto& c : m.currencies) {
            c.a.assign(2, 0.0);
            c.b.assign(2, 0.0);
        }
        const auto b = mc::simulate_market(m, model::default_state(m), cfg);
        const int last = b.n_times() - 1;
        for (int p = 0; p < 8; ++p) {
            for (int i = 0; i < 3; ++i) {
                CHECK(b.y(p, last, i) ==
                      doctest::Approx(m.currencies[i].h * cfg.horizon).epsilon(1e-12));
                CHECK(b.bhat(p, last, i) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(b.qv(p, last, i) == 0.0);
            }
        }
    }
}

TEST_CASE("martingale defect of the benchmarked account" * doctest::timeout(1800)) {
    SUBCASE("positive 1/sqrt(V) loading keeps the account a martingale in sample") {
        const auto m = testdata::figure1(0.4);
        McConfig cfg;
        cfg.dt = 1.0 / 512.0;
        cfg.horizon = 10.0;
        cfg.n_paths = 10000;
        cfg.seed = 2024;
        const auto acc = mc::simulate_benchmarked_account(m, 0, cfg);
        const int last = static_cast<int>(acc.times.size()) - 1;
        std::vector<double> terminal(cfg.n_paths);
        for (int p = 0; p < cfg.n_paths; ++p) terminal[p] = acc.bhat_at(p, last);
        const auto defect = mc::martingale_defect(terminal, 1.0);
        CHECK(std::abs(defect.mean) <= 3.0 * defect.std_error);
    }
    SUBCASE("negative loading loses mass visibly") {
        const auto m = testdata::figure1(-0.4);
        McConfig cfg;
        cfg.dt = 1.0 / 512.0;
        cfg.horizon = 10.0;
        cfg.n_paths = 10000;
        cfg.seed = 2024;
        const auto acc = mc::simulate_benchmarked_account(m, 0, cfg);
        const int last = static_cast<int>(acc.times.size()) - 1;
        std::vector<double> terminal(cfg.n_paths);
        for (int p = 0; p < cfg.n_paths; ++p) terminal[p] = acc.bhat_at(p, last);
        const auto defect = mc::martingale_defect(terminal, 1.0);
        CHECK(defect.mean < -3.0 * defect.std_error);
    }
    SUBCASE("zero projections give zero defect and zero quadratic variation") {
        auto m = testdata::figure1(0.0);
        m.currencies[0].a[0] = 0.0;
        McConfig cfg;
        cfg.dt = 1.0 / 64.0;
        cfg.horizon = 2.0;
        cfg.n_paths = 100;
        cfg.seed = 5;
        const auto acc = mc::simulate_benchmarked_account(m, 0, cfg);
        const int last = static_cast<int>(acc.times.size()) - 1;
        for (int p = 0; p < cfg.n_paths; ++p) {
            CHECK(acc.bhat_at(p, last) == 1.0);
            CHECK(acc.qv_at(p, last) == 0.0);
        }
    }
}

TEST_CASE("real-world pricing estimates agree with the analytic engine" *
          doctest::timeout(1800)) {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    McConfig cfg;
    cfg.dt = 1.0 / 512.0;
    cfg.n_paths = 100000;
    cfg.seed = 314;
    SUBCASE("ATM call at one year") {
        const int i = m.currency_index("USD"), j = m.currency_index("EUR");
        mc::PayoffSpec payoff;
        payoff.kind = mc::PayoffSpec::Kind::Call;
        payoff.i = i;
        payoff.j = j;
        payoff.strike = 1.0;
        const auto est = mc::mc_price(m, i, payoff, st, 1.0, cfg);
        const double analytic = pricing::lee_call_price(m, i, j, st, 1.0, 1.0, -0.5);
        CHECK(std::abs(est.mean - analytic) < 3.0 * est.std_error + 1e-3);
    }
    SUBCASE("unit payoff reproduces the strict-local bond discount") {
        const int jpy = m.currency_index("JPY");
        mc::PayoffSpec payoff;  // Unit
        const auto est = mc::mc_price(m, jpy, payoff, st, 10.0, cfg);
        const double analytic = pricing::zcb_real_world(m, jpy, st, 10.0);
        CHECK(std::abs(est.mean - analytic) < 3.0 * est.std_error + 2e-3);
    }
    SUBCASE("spot payoff reproduces the fair forward leg") {
        const int i = m.currency_index("USD"), j = m.currency_index("EUR");
        mc::PayoffSpec payoff;
        payoff.kind = mc::PayoffSpec::Kind::Spot;
        payoff.i = i;
        payoff.j = j;
        McConfig small = cfg;
        small.n_paths = 40000;
        const auto est = mc::mc_price(m, i, payoff, st, 1.0, small);
        const double analytic = charfn::discounted_cf(m, i, j, st, 1.0, {0.0, -1.0}).real();
        CHECK(std::abs(est.mean - analytic) < 3.0 * est.std_error + 1e-3);
    }
    SUBCASE("zero payoff") {
        mc::PayoffSpec payoff;
        payoff.kind = mc::PayoffSpec::Kind::Call;
        payoff.i = 0;
        payoff.j = 1;
        payoff.strike = 1e9;  // unreachable strike
        McConfig tiny = cfg;
        tiny.n_paths = 100;
        tiny.dt = 1.0 / 64.0;
        const auto est = mc::mc_price(m, 0, payoff, st, 1.0, tiny);
        CHECK(est.mean == 0.0);
    }
}

TEST_CASE("antithetic pairing reduces variance on a monotone payoff") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("USD"), j = m.currency_index("EUR");
    mc::PayoffSpec payoff;
    payoff.kind = mc::PayoffSpec::Kind::Call;
    payoff.i = i;
    payoff.j = j;
    payoff.strike = 1.0;
    McConfig cfg;
    cfg.dt = 1.0 / 128.0;
    cfg.n_paths = 20000;
    cfg.seed = 11;
    const auto plain = mc::mc_price(m, i, payoff, st, 1.0, cfg);
    cfg.antithetic = true;
    const auto anti = mc::mc_price(m, i, payoff, st, 1.0, cfg);
    CHECK(anti.std_error < plain.std_error);
    CHECK(std::abs(anti.mean - plain.mean) <
          4.0 * std::sqrt(anti.std_error * anti.std_error + plain.std_error * plain.std_error));
}

TEST_CASE("halving dt moves the Euler estimate by less than two combined errors") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("USD"), j = m.currency_index("EUR");
    mc::PayoffSpec payoff;
    payoff.kind = mc::PayoffSpec::Kind::Call;
    payoff.i = i;
    payoff.j = j;
    payoff.strike = 1.0;
    McConfig cfg;
    cfg.dt = 1.0 / 128.0;
    cfg.n_paths = 40000;
    cfg.seed = 77;
    const auto coarse = mc::mc_price(m, i, payoff, st, 1.0, cfg);
    cfg.dt = 1.0 / 256.0;
    const auto fine = mc::mc_price(m, i, payoff, st, 1.0, cfg);
    const double combined =
        std::sqrt(coarse.std_error * coarse.std_error + fine.std_error * fine.std_error);
    CHECK(std::abs(coarse.mean - fine.mean) < 2.0 * combined + 5e-4);
}

TEST_CASE("quadratic variation separates the strict local martingale regime" *
          doctest::timeout(1800)) {
    McConfig cfg;
    cfg.dt = 1.0 / 512.0;
    cfg.horizon = 10.0;
    cfg.n_paths = 4000;
    cfg.seed = 555;
    const auto acc_true = mc::simulate_benchmarked_account(testdata::figure1(0.4), 0, cfg);
    const auto acc_strict = mc::simulate_benchmarked_account(testdata::figure1(-0.4), 0, cfg);
    const int last = static_cast<int>(acc_true.times.size()) - 1;
    std::vector<double> qv_true(cfg.n_paths), qv_strict(cfg.n_paths);
    for (int p = 0; p < cfg.n_paths; ++p) {
        qv_true[p] = acc_true.qv_at(p, last);
        qv_strict[p] = acc_strict.qv_at(p, last);
    }
    // one-sided Mann-Whitney: strict-local QV stochastically larger, 95%
    CHECK(oracles::mann_whitney_z(qv_strict, qv_true) > 1.645);
}
