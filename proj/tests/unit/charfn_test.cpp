#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "fx42/charfn.hpp"
#include "fx42/mc.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace fx42;
using charfn::Complex;
using cir::DomainStatus;

namespace {

std::vector<Complex> zeta_zero(int n) { return std::vector<Complex>(n, Complex(0.0, 0.0)); }

// zeta = i e_c, the domestic bond slot.
std::vector<Complex> zeta_bond(int n, int c) {
    auto z = zeta_zero(n);
    z[c] = Complex(0.0, 1.0);
    return z;
}

// Stressed two-currency model whose domestic bond transform explodes in
// finite time: a large projection with rho = -1 pushes lambda below the
// admissible threshold, and a slightly negative rate loading H shrinks
// sqrt(A) enough to leave only the lambda condition violated.
model::Model42 stressed_model() {
    model::Model42 m;
    m.factors = {{1.0, 0.4, 0.6, 0.5, -1.0}};
    m.currencies = {
        {"AAA", 0.0, {-0.03}, {0.0}, {2.0}, {0.0}},
        {"BBB", 0.0, {0.0}, {0.0}, {0.0}, {0.0}},
    };
    return m;
}

}  // namespace

TEST_CASE("coefficients at zeta = 0") {
    const auto m = testdata::table1();
    const auto tc = charfn::coefficients(m, zeta_zero(3));
    for (int k = 0; k < 2; ++k) {
        const auto& fc = tc.factor[k];
        CHECK(std::abs(fc.alpha) == 0.0);
        CHECK(std::abs(fc.lambda) == 0.0);
        CHECK(std::abs(fc.mu) == 0.0);
        CHECK(std::abs(fc.nu) == 0.0);
        const auto& f = m.factors[k];
        const double expected_m =
            2.0 / (f.sigma * f.sigma) * std::abs(f.kappa * f.theta - 0.5 * f.sigma * f.sigma);
        CHECK(fc.m.real() == doctest::Approx(expected_m).epsilon(1e-14));
        CHECK(fc.m.imag() == 0.0);
    }
}

TEST_CASE("coefficients of the domestic bond slot") {
    // For zeta = i e_dom the sums collapse to the domestic projections with
    // i zeta = -1, so alpha_k = rho_k b_k / sigma_k, lambda_k = rho_k a_k /
    // sigma_k and A_k = (kappa_k + sigma_k rho_k a_k)^2.
    const auto m = testdata::table1();
    const int jpy = m.currency_index("JPY");
    const auto tc = charfn::coefficients(m, zeta_bond(3, jpy));
    for (int k = 0; k < 2; ++k) {
        const auto& f = m.factors[k];
        const auto& c = m.currencies[jpy];
        CHECK(tc.factor[k].alpha.real() ==
              doctest::Approx(f.rho * c.b[k] / f.sigma).epsilon(1e-14));
        CHECK(tc.factor[k].lambda.real() ==
              doctest::Approx(f.rho * c.a[k] / f.sigma).epsilon(1e-14));
        const double sqrtA = f.kappa + f.sigma * f.rho * c.a[k];
        CHECK(tc.factor[k].A.real() == doctest::Approx(sqrtA * sqrtA).epsilon(1e-14));
        CHECK(std::abs(tc.factor[k].A.imag()) < 1e-16);
    }
    // direct arithmetic: sqrt(A_2) = 0.5110 + 0.6786 * (-0.8925) * 0.0687
    CHECK(std::sqrt(tc.factor[1].A.real()) == doctest::Approx(0.46939181065).epsilon(1e-9));
}

TEST_CASE("strip verdicts") {
    const auto m = testdata::table1();
    SUBCASE("real characteristic direction is always fine for a Feller-compliant model") {
        const std::vector<double> w(3, 0.0);
        CHECK(charfn::strip_check(m, w, 10.0).status == DomainStatus::ValidAllT);
    }
    SUBCASE("bond directions extend to all maturities") {
        for (int c = 0; c < 3; ++c) {
            std::vector<double> w(3, 0.0);
            w[c] = -1.0;  // zeta = i e_c
            CHECK(charfn::strip_check(m, w, 40.0).status == DomainStatus::ValidAllT);
        }
    }
    SUBCASE("the opposite direction probes exploding GOP moments") {
        // E[D(T)] diverges for USD and EUR (f2 turns negative) but not JPY.
        std::vector<double> w(3, 0.0);
        w[0] = 1.0;
        CHECK(charfn::strip_check(m, w, 1.0).status == DomainStatus::Invalid);
        w = {0.0, 1.0, 0.0};
        CHECK(charfn::strip_check(m, w, 1.0).status == DomainStatus::Invalid);
        w = {0.0, 0.0, 1.0};
        CHECK(charfn::strip_check(m, w, 1.0).status == DomainStatus::ValidAllT);
    }
    SUBCASE("constructed lambda violation yields the closed-form explosion time") {
        const auto sm = stressed_model();
        const std::vector<double> w{-1.0, 0.0};
        const auto v = charfn::strip_check(sm, w, 1.0);
        REQUIRE(v.status == DomainStatus::ValidUntil);
        // direct evaluation of t* in the model parameterization
        const auto& f = sm.factors[0];
        const double a = sm.currencies[0].a[0];
        const double s2 = f.sigma * f.sigma;
        const double lam = f.rho * a / f.sigma;  // lambda at w = -e_1
        const double A = (f.kappa + f.sigma * f.rho * a) * (f.kappa + f.sigma * f.rho * a) +
                         2.0 * s2 * sm.currencies[0].H[0];
        const double sA = std::sqrt(A);
        const double expected = std::log(1.0 - 2.0 * sA / (f.kappa + s2 * lam + sA)) / sA;
        CHECK(v.t_star == doctest::Approx(expected).epsilon(1e-12));
        CHECK(v.allows(0.9 * v.t_star));
        CHECK(!v.allows(1.1 * v.t_star));
    }
}

TEST_CASE("joint characteristic function: pinned cases") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    SUBCASE("zeta = 0 gives 1") {
        CHECK(std::abs(charfn::joint_cf(m, st, 3.0, zeta_zero(3)) - Complex(1.0, 0.0)) < 1e-12);
    }
    SUBCASE("JPY bond slot reproduces the long-dated price quotients") {
        const int jpy = m.currency_index("JPY");
        const auto zeta = zeta_bond(3, jpy);
        // Psi * D^jpy(t) * e^{h tau} is the rate-free quotient to the formal
        // risk-neutral price: 0.83195/0.92073 at 10y, 0.58296/0.74894 at 20y.
        auto quotient = [&](double tau) {
            const Complex psi = charfn::joint_cf(m, st, tau, zeta);
            return (psi * std::exp(st.Y[jpy] + m.currencies[jpy].h * tau)).real();
        };
        CHECK(std::abs(quotient(10.0) - 0.83195 / 0.92073) < 1e-3);
        CHECK(std::abs(quotient(20.0) - 0.58296 / 0.74894) < 1e-3);
        CHECK(std::abs(quotient(1.0) - 0.99671 / 0.99679) < 1e-4);
    }
    SUBCASE("all-b-zero degenerates to the Riccati characteristic function") {
        auto hm = m;
        for (auto& c : hm.currencies) c.b.assign(2, 0.0);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int it = 0; it < 60; ++it) {
            std::vector<Complex> zeta(3);
            for (auto& z : zeta) z = Complex(8.0 * u(rng), 0.4 * u(rng));
            const double tau = 0.25 + 4.0 * std::abs(u(rng));
            std::vector<double> w(3);
            for (int i = 0; i < 3; ++i) w[i] = -zeta[i].imag();
            if (!charfn::strip_check(hm, w, tau).allows(tau)) continue;
            const Complex got = charfn::joint_cf(hm, st, tau, zeta);
            const Complex want = oracles::heston_joint_cf(hm, st, tau, zeta);
            CHECK(std::abs(got - want) <= 1e-8 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("discounted characteristic function") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("EUR");
    const int j = m.currency_index("USD");
    SUBCASE("z = 0 is the domestic real-world bond price") {
        const Complex p = charfn::discounted_cf(m, i, j, st, 5.0, {0.0, 0.0});
        CHECK(std::abs(p.imag()) < 1e-14);
        CHECK(p.real() > 0.0);
        CHECK(p.real() < 1.0);  // positive rates
        // independent route: zeta = i e_i through the joint transform
        const Complex psi = charfn::joint_cf(m, st, 5.0, zeta_bond(3, i));
        CHECK(p.real() == doctest::Approx((std::exp(st.Y[i]) * psi).real()).epsilon(1e-13));
    }
    SUBCASE("z = -i is the fair value of one unit of foreign currency") {
        const Complex v = charfn::discounted_cf(m, i, j, st, 5.0, {0.0, -1.0});
        CHECK(std::abs(v.imag()) < 1e-14);
        // equals spot times the foreign bond by symmetry of the construction
        const Complex pj = charfn::discounted_cf(m, j, i, st, 5.0, {0.0, 0.0});
        const double spot = std::exp(st.Y[i] - st.Y[j]);
        CHECK(v.real() == doctest::Approx(spot * pj.real()).epsilon(1e-12));
    }
    SUBCASE("conjugate symmetry in the real argument") {
        for (double alpha : {-0.5, -0.25}) {
            for (double u : {0.3, 1.7, 11.0}) {
                const Complex a = charfn::discounted_cf(m, i, j, st, 2.0, Complex(u, alpha));
                const Complex b = charfn::discounted_cf(m, i, j, st, 2.0, Complex(-u, alpha));
                CHECK(std::abs(a - std::conj(b)) < 1e-12 * (1.0 + std::abs(a)));
            }
        }
    }
    SUBCASE("modulus bound |phi(u)| <= phi(0)") {
        const double p0 = charfn::discounted_cf(m, i, j, st, 2.0, {0.0, 0.0}).real();
        for (double u = 0.5; u < 60.0; u *= 1.7) {
            CHECK(std::abs(charfn::discounted_cf(m, i, j, st, 2.0, {u, 0.0})) <= p0 + 1e-12);
        }
    }
    SUBCASE("foreign-domestic duality phi^{j,i}(-z-i) S = phi^{i,j}(z)") {
        const Complex iu(0.0, 1.0);
        const double spot = std::exp(st.Y[i] - st.Y[j]);
        for (const Complex z : {Complex(0.7, -0.5), Complex(3.0, -0.2), Complex(0.0, -0.9)}) {
            const Complex lhs = spot * charfn::discounted_cf(m, j, i, st, 2.0, -z - iu);
            const Complex rhs = charfn::discounted_cf(m, i, j, st, 2.0, z);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
        }
    }
    SUBCASE("continuity in tau on [0.01, 30]") {
        const Complex z(1.3, -0.5);
        Complex prev;
        bool first = true;
        for (double tau = 0.01; tau <= 30.0; tau += 0.13) {
            const Complex v = charfn::discounted_cf(m, i, j, st, tau, z);
            if (!first) {
                CHECK(std::abs(v - prev) < 0.08 * std::max(std::abs(prev), 1e-8));
            }
            prev = v;
            first = false;
        }
    }
}

TEST_CASE("bond moment criterion") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    SUBCASE("calibrated model supports every pair out to 20 years") {
        for (double tau : {0.5, 5.0, 20.0}) {
            CHECK(charfn::bond_moment_criterion(m, 0, 1, st, tau, -0.5));
            CHECK(charfn::bond_moment_criterion(m, 1, 2, st, tau, -0.25));
            CHECK(charfn::bond_moment_criterion(m, 0, 2, st, tau, -0.75));
        }
    }
    SUBCASE("degenerate tau") {
        CHECK(charfn::bond_moment_criterion(m, 0, 1, st, 0.0, -0.5));
    }
    SUBCASE("stressed model fails beyond its explosion time") {
        const auto sm = stressed_model();
        const auto sst = model::default_state(sm);
        const std::vector<double> w{-1.0, 0.0};
        const auto v = charfn::strip_check(sm, w, 1.0);
        REQUIRE(v.status == DomainStatus::ValidUntil);
        CHECK(charfn::bond_moment_criterion(sm, 0, 1, sst, 0.9 * v.t_star, -0.5));
        CHECK(!charfn::bond_moment_criterion(sm, 0, 1, sst, 1.1 * v.t_star, -0.5));
    }
    SUBCASE("alpha must lie in (-1,0)") {
        CHECK_THROWS_AS(charfn::bond_moment_criterion(m, 0, 1, st, 1.0, 0.5),
                        std::domain_error);
    }
}

TEST_CASE("Monte Carlo agreement of the discounted characteristic function" *
          doctest::timeout(1800)) {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("EUR");
    const int j = m.currency_index("USD");
    const double tau = 1.0;
    const double alpha = -0.5;

    mc::McConfig cfg;
    cfg.dt = 1.0 / 512.0;
    cfg.horizon = tau;
    cfg.n_paths = 100000;
    cfg.seed = 4242;
    const auto bundle = mc::simulate_market(m, st, cfg);
    const int last = bundle.n_times() - 1;

    for (int pt = 0; pt < 10; ++pt) {
        const double u = 0.5 + 1.1 * pt;
        const Complex z(u, alpha);
        const Complex analytic = charfn::discounted_cf(m, i, j, st, tau, z);
        std::vector<double> re(cfg.n_paths), im(cfg.n_paths);
        for (int p = 0; p < cfg.n_paths; ++p) {
            const double x = bundle.y(p, last, i) - bundle.y(p, last, j);
            const double damp = std::exp(st.Y[i] - bundle.y(p, last, i) - alpha * x);
            re[p] = damp * std::cos(u * x);
            im[p] = damp * std::sin(u * x);
        }
        const auto er = oracles::mean_se(re);
        const auto ei = oracles::mean_se(im);
        // 3 s.e. plus a small cushion for the Euler discretization bias
        CHECK(std::abs(er.mean - analytic.real()) < 3.0 * er.se + 4e-3);
        CHECK(std::abs(ei.mean - analytic.imag()) < 3.0 * ei.se + 4e-3);
    }
}
