#include <doctest.h>

#include <cmath>
#include <vector>

#include "fx42/errors.hpp"
#include "fx42/pricing.hpp"
#include "fx42/specfun.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace fx42;
using pricing::DeltaSpec;
using pricing::FftConfig;

TEST_CASE("Black utilities") {
    const double spot = 1.25, tau = 0.75, df_dom = 0.99, df_for = 0.985;
    SUBCASE("implied vol round trip") {
        for (double sigma : {0.08, 0.21, 0.6}) {
            for (double K : {1.0, 1.25, 1.6}) {
                const double p = pricing::black_price(spot, K, tau, sigma, df_dom, df_for, true);
                CHECK(std::abs(pricing::implied_vol(p, spot, K, tau, df_dom, df_for) - sigma) <
                      1e-10);
            }
        }
    }
    SUBCASE("ATM expansion sanity") {
        const double F = spot * df_for / df_dom;
        const double sigma = 0.05, t = 0.1;
        const double p = pricing::black_price(spot, F, t, sigma, df_dom, df_for, true);
        CHECK(p == doctest::Approx(0.3989422804 * sigma * std::sqrt(t) * F * df_dom)
                       .epsilon(2e-3));
    }
    SUBCASE("price near intrinsic gives a small vol, monotone in the excess") {
        const double K = 1.0;
        const double intrinsic = df_dom * (spot * df_for / df_dom - K);
        const double v1 = pricing::implied_vol(intrinsic + 1e-6, spot, K, tau, df_dom, df_for);
        const double v2 = pricing::implied_vol(intrinsic + 1e-4, spot, K, tau, df_dom, df_for);
        CHECK(v1 < v2);
        CHECK(v1 < 0.2);
    }
    SUBCASE("out-of-bounds prices are rejected") {
        CHECK_THROWS_AS(pricing::implied_vol(-0.01, spot, 1.0, tau, df_dom, df_for),
                        std::domain_error);
        CHECK_THROWS_AS(pricing::implied_vol(spot * df_for + 0.01, spot, 1.0, tau, df_dom, df_for),
                        std::domain_error);
    }
}

TEST_CASE("delta specs") {
    SUBCASE("parsing") {
        CHECK(DeltaSpec::parse("ATM").kind == DeltaSpec::Kind::Atm);
        const auto dp = DeltaSpec::parse("15DP");
        CHECK(dp.kind == DeltaSpec::Kind::DeltaPut);
        CHECK(dp.delta == 0.15);
        const auto dc = DeltaSpec::parse("25dc");
        CHECK(dc.kind == DeltaSpec::Kind::DeltaCall);
        CHECK(dc.delta == 0.25);
        const auto ks = DeltaSpec::parse("K=1.2345");
        CHECK(ks.kind == DeltaSpec::Kind::Strike);
        CHECK(ks.strike == 1.2345);
        CHECK_THROWS_AS(DeltaSpec::parse("junk"), ValidationError);
        CHECK_THROWS_AS(DeltaSpec::parse("120DC"), ValidationError);
    }
    SUBCASE("delta-neutral straddle strike") {
        const double spot = 1.3, tau = 1.0, sigma = 0.1;
        const double K = pricing::strike_from_delta(DeltaSpec::parse("ATM"), sigma, spot, tau,
                                                    1.0, 1.0);
        CHECK(K == doctest::Approx(spot * std::exp(0.5 * sigma * sigma * tau)).epsilon(1e-14));
    }
    SUBCASE("25 delta call solves the Black delta by construction") {
        const double spot = 1.0, tau = 1.0, sigma = 0.10;
        const double K = pricing::strike_from_delta(DeltaSpec::parse("25DC"), sigma, spot, tau,
                                                    1.0, 1.0);
        const double d1 = (std::log(spot / K) + 0.5 * sigma * sigma * tau) /
                          (sigma * std::sqrt(tau));
        CHECK(specfun::norm_cdf(d1) == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("put-call strike symmetry at a common vol") {
        const double spot = 1.1, tau = 0.5, sigma = 0.2, df_dom = 0.99, df_for = 0.98;
        const double F = spot * df_for / df_dom;
        const double kc = pricing::strike_from_delta(DeltaSpec::parse("25DC"), sigma, spot, tau,
                                                     df_dom, df_for);
        const double kp = pricing::strike_from_delta(DeltaSpec::parse("25DP"), sigma, spot, tau,
                                                     df_dom, df_for);
        CHECK(kc * kp ==
              doctest::Approx(F * F * std::exp(sigma * sigma * tau)).epsilon(1e-12));
    }
}

TEST_CASE("quadrature call pricer") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("EUR");
    const int j = m.currency_index("USD");
    const double tau = 1.0;
    SUBCASE("tiny strike tends to the fair forward leg") {
        const double K = 1e-3;
        const double fwd_leg = charfn::discounted_cf(m, i, j, st, tau, {0.0, -1.0}).real();
        const double bond_leg = charfn::discounted_cf(m, i, j, st, tau, {0.0, 0.0}).real();
        const double p = pricing::lee_call_price(m, i, j, st, tau, K, -0.5);
        CHECK(p == doctest::Approx(fwd_leg - K * bond_leg).epsilon(1e-8));
    }
    SUBCASE("deep out-of-the-money decays to zero") {
        const double p3 = pricing::lee_call_price(m, i, j, st, tau, 3.0, -0.5);
        const double p5 = pricing::lee_call_price(m, i, j, st, tau, 5.0, -0.5);
        CHECK(p3 < 1e-3);
        CHECK(p5 < p3);
    }
    SUBCASE("contour independence inside the strip") {
        const double ref = pricing::lee_call_price(m, i, j, st, tau, 1.0, -0.5);
        for (double alpha : {-0.75, -0.25}) {
            CHECK(pricing::lee_call_price(m, i, j, st, tau, 1.0, alpha) ==
                  doctest::Approx(ref).epsilon(1e-8));
        }
    }
    SUBCASE("positive contour plus its residue row agrees too") {
        std::vector<double> w(3, 0.0);
        w[i] = 0.25;
        w[j] = -1.25;
        if (charfn::strip_check(m, w, tau).allows(tau)) {
            const double ref = pricing::lee_call_price(m, i, j, st, tau, 1.0, -0.5);
            CHECK(pricing::lee_call_price(m, i, j, st, tau, 1.0, 0.25) ==
                  doctest::Approx(ref).epsilon(1e-7));
        }
    }
    SUBCASE("pole contours are rejected") {
        CHECK_THROWS_AS(pricing::lee_call_price(m, i, j, st, tau, 1.0, 0.0), std::domain_error);
        CHECK_THROWS_AS(pricing::lee_call_price(m, i, j, st, tau, 1.0, -1.0), std::domain_error);
    }
    SUBCASE("put parity") {
        const double K = 1.05;
        const double call = pricing::lee_call_price(m, i, j, st, tau, K, -0.5);
        const double put = pricing::lee_put_price(m, i, j, st, tau, K, -0.5);
        const double fwd_leg = charfn::discounted_cf(m, i, j, st, tau, {0.0, -1.0}).real();
        const double bond_leg = charfn::discounted_cf(m, i, j, st, tau, {0.0, 0.0}).real();
        CHECK(call - put == doctest::Approx(fwd_leg - K * bond_leg).epsilon(1e-10));
    }
}

TEST_CASE("Heston-degenerate model matches an independent risk-neutral pricer") {
    auto m = testdata::table1();
    for (auto& c : m.currencies) c.b.assign(2, 0.0);
    const auto st = model::default_state(m);
    const int i = m.currency_index("EUR");
    const int j = m.currency_index("USD");
    for (double tau : {0.5, 1.0}) {
        for (double K : {0.85, 1.0, 1.2}) {
            const double lee = pricing::lee_call_price(m, i, j, st, tau, K, -0.5);
            const double rn = oracles::heston_rn_call(m, i, j, st, tau, K);
            CHECK(lee == doctest::Approx(rn).epsilon(1e-6));
        }
    }
}

TEST_CASE("batched Fourier pricer") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int i = m.currency_index("EUR");
    const int j = m.currency_index("USD");
    const FftConfig cfg;
    SUBCASE("agrees with the quadrature route near the money") {
        for (double tau : {1.0 / 12.0, 0.5, 1.5}) {
            const double atm_vol = 0.14;  // rough scale for the strike window
            const double width = 3.0 * atm_vol * std::sqrt(tau);
            std::vector<double> strikes;
            for (int q = -3; q <= 3; ++q) {
                strikes.push_back(std::exp(width * q / 3.0));
            }
            const auto fft = pricing::fft_call_prices(m, i, j, st, tau, cfg, strikes);
            for (size_t q = 0; q < strikes.size(); ++q) {
                const double lee = pricing::lee_call_price(m, i, j, st, tau, strikes[q], -0.5);
                CHECK(std::abs(fft[q] - lee) < 1e-6);
            }
        }
    }
    SUBCASE("grid refinement stability") {
        FftConfig fine;
        fine.n_points = 8192;
        fine.eta = 0.05;
        const std::vector<double> strikes{0.95, 1.0, 1.05};
        const auto a = pricing::fft_call_prices(m, i, j, st, 1.0, cfg, strikes);
        const auto b = pricing::fft_call_prices(m, i, j, st, 1.0, fine, strikes);
        for (size_t q = 0; q < strikes.size(); ++q) {
            // The default grid's own Simpson error near u = 0 (the rational
            // factor has curvature scale |alpha| = 0.5) caps the refinement
            // agreement at ~1e-7 of spot.
            CHECK(std::abs(a[q] - b[q]) < 1.5e-7);
        }
    }
    SUBCASE("linear interpolation mode is exact on its own grid") {
        FftConfig lin = cfg;
        lin.interp = FftConfig::Interp::Linear;
        const double lambda = 2.0 * 3.14159265358979324 / (cfg.n_points * cfg.eta);
        const double k_grid = -0.5 * cfg.n_points * lambda + lambda * (cfg.n_points / 2 + 7);
        const double K = std::exp(k_grid);
        const auto exact = pricing::fft_call_prices(m, i, j, st, 1.0, cfg, {K});
        const auto interp = pricing::fft_call_prices(m, i, j, st, 1.0, lin, {K});
        CHECK(interp[0] == doctest::Approx(exact[0]).epsilon(1e-9));
    }
    SUBCASE("prices are decreasing and convex in strike") {
        std::vector<double> strikes;
        for (int q = 0; q <= 40; ++q) strikes.push_back(0.6 + 0.02 * q);
        const auto p = pricing::fft_call_prices(m, i, j, st, 1.0, cfg, strikes);
        for (size_t q = 0; q + 1 < p.size(); ++q) {
            CHECK(p[q + 1] <= p[q] + 1e-12);
        }
        for (size_t q = 1; q + 1 < p.size(); ++q) {
            CHECK(p[q + 1] - 2.0 * p[q] + p[q - 1] >= -1e-10);
        }
    }
    SUBCASE("config validation") {
        FftConfig bad = cfg;
        bad.n_points = 1000;
        CHECK_THROWS_AS(pricing::fft_call_prices(m, i, j, st, 1.0, bad, {1.0}), ValidationError);
    }
}

TEST_CASE("zero coupon bonds") {
    const auto m = testdata::table1();
    const auto st = model::default_state(m);
    const int usd = m.currency_index("USD");
    const int jpy = m.currency_index("JPY");
    SUBCASE("tau = 0") {
        CHECK(pricing::zcb_real_world(m, usd, st, 0.0) == 1.0);
        CHECK(pricing::zcb_ba_rn_ratio(m, usd, st, 0.0) == 1.0);
    }
    SUBCASE("USD martingale case: real world equals formal risk neutral") {
        // rate implied by the published 10y discount 0.73800
        const double r = -std::log(0.73800) / 10.0;
        auto mm = m;
        mm.currencies[usd].h = r;
        const double p = pricing::zcb_real_world(mm, usd, st, 10.0);
        CHECK(std::abs(p - 0.73800) < 1e-5);
        CHECK(std::abs(p - pricing::zcb_formal_risk_neutral(r, 10.0)) < 1e-10);
    }
    SUBCASE("JPY strict-local case: published quotients") {
        CHECK(std::abs(pricing::zcb_ba_rn_ratio(m, jpy, st, 10.0) - 0.83195 / 0.92073) < 1e-3);
        CHECK(std::abs(pricing::zcb_ba_rn_ratio(m, jpy, st, 20.0) - 0.58296 / 0.74894) < 1e-3);
    }
    SUBCASE("closed form: published quotients and limits") {
        const double v2 = st.V[1];
        CHECK(std::abs(pricing::zcb_closed_form_ratio(m, jpy, v2, 20.0) - 0.58296 / 0.74894) <
              1e-3);
        CHECK(std::abs(pricing::zcb_closed_form_ratio(m, jpy, v2, 1.0) - 0.99671 / 0.99679) <
              1e-4);
        CHECK(pricing::zcb_closed_form_ratio(m, jpy, v2, 1e-9) ==
              doctest::Approx(1.0).epsilon(1e-9));
        CHECK(pricing::zcb_closed_form_ratio(m, jpy, v2, 5.0) < 1.0);  // strictly cheaper
        CHECK(pricing::zcb_closed_form_42(m, jpy, v2, 5.0) ==
              doctest::Approx(std::exp(-m.currencies[jpy].h * 5.0) *
                              pricing::zcb_closed_form_ratio(m, jpy, v2, 5.0))
                  .epsilon(1e-15));
    }
    SUBCASE("closed form preconditions are reported") {
        // USD has the factor-2 true-martingale sign, so the gamma form fails
        CHECK_THROWS_WITH_AS(static_cast<void>(pricing::zcb_closed_form_42(m, usd, 1.0, 5.0)),
                             doctest::Contains("factor-2"), ValidationError);
        auto bad = m;
        bad.currencies[jpy].b[0] = -2.5;  // breaks the factor-1 drop-out
        CHECK_THROWS_WITH_AS(static_cast<void>(pricing::zcb_closed_form_42(bad, jpy, 1.0, 5.0)),
                             doctest::Contains("factor-1"), ValidationError);
        auto stoch = m;
        stoch.currencies[jpy].H[0] = 0.01;
        CHECK_THROWS_WITH_AS(static_cast<void>(pricing::zcb_closed_form_42(stoch, jpy, 1.0, 5.0)),
                             doctest::Contains("constant rate"), ValidationError);
    }
    SUBCASE("closed form equals the transform route to 1e-9 across maturities") {
        for (double tau = 0.1; tau <= 30.0; tau += 0.61) {
            const double a = pricing::zcb_ba_rn_ratio(m, jpy, st, tau);
            const double b = pricing::zcb_closed_form_ratio(m, jpy, st.V[1], tau);
            CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
        }
    }
    SUBCASE("real-world price never exceeds the formal risk-neutral one") {
        for (double tau : {1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0}) {
            CHECK(pricing::zcb_ba_rn_ratio(m, jpy, st, tau) <= 1.0 + 1e-12);
            CHECK(pricing::zcb_ba_rn_ratio(m, usd, st, tau) <= 1.0 + 1e-12);
        }
    }
    SUBCASE("formal risk neutral discounting") {
        CHECK(pricing::zcb_formal_risk_neutral(0.0, 5.0) == 1.0);
        CHECK(pricing::zcb_formal_risk_neutral(0.01, 10.0) ==
              doctest::Approx(0.904837418).epsilon(1e-9));
        const double r_1w = -std::log(0.99990) * 52.0;
        CHECK(pricing::zcb_formal_risk_neutral(r_1w, 1.0 / 52.0) ==
              doctest::Approx(0.99990).epsilon(1e-9));
    }
}
