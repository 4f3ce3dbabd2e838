#include "fx42/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "fx42/errors.hpp"
#include "fx42/specfun.hpp"

namespace fx42::pricing {

using Complex = std::complex<double>;
using specfun::norm_cdf;
using specfun::norm_inv_cdf;

// ---- Black utilities ------------------------------------------------------

double black_price(double spot, double K, double tau, double sigma, double df_dom,
                   double df_for, bool is_call) {
    if (!(spot > 0.0 && K > 0.0 && tau >= 0.0 && df_dom > 0.0 && df_for > 0.0)) {
        throw std::domain_error("black_price: bad market inputs");
    }
    const double F = spot * df_for / df_dom;
    const double stdev = sigma * std::sqrt(tau);
    if (stdev <= 0.0) {
        const double intrinsic = is_call ? std::max(F - K, 0.0) : std::max(K - F, 0.0);
        return df_dom * intrinsic;
    }
    const double d1 = (std::log(F / K) + 0.5 * stdev * stdev) / stdev;
    const double d2 = d1 - stdev;
    if (is_call) return df_dom * (F * norm_cdf(d1) - K * norm_cdf(d2));
    return df_dom * (K * norm_cdf(-d2) - F * norm_cdf(-d1));
}

double black_vega(double spot, double K, double tau, double sigma, double df_dom,
                  double df_for) {
    const double F = spot * df_for / df_dom;
    const double stdev = sigma * std::sqrt(tau);
    if (stdev <= 0.0) return 0.0;
    const double d1 = (std::log(F / K) + 0.5 * stdev * stdev) / stdev;
    const double pdf = std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * std::numbers::pi);
    return df_dom * F * pdf * std::sqrt(tau);
}

double implied_vol(double price, double spot, double K, double tau, double df_dom,
                   double df_for, bool is_call, const NumericPolicy& policy) {
    const double F = spot * df_for / df_dom;
    const double lower =
        df_dom * (is_call ? std::max(F - K, 0.0) : std::max(K - F, 0.0));
    const double upper = df_dom * (is_call ? F : K);
    if (!(price > lower && price < upper)) {
        std::ostringstream msg;
        msg << "implied_vol: price " << price << " outside no-arbitrage bounds (" << lower
            << ", " << upper << ")";
        throw std::domain_error(msg.str());
    }
    const double tol = policy.implied_vol_price_tol * spot;
    double lo = 1e-9, hi = 5.0;
    double sigma = 0.25;
    for (int it = 0; it < policy.implied_vol_max_iter; ++it) {
        const double p = black_price(spot, K, tau, sigma, df_dom, df_for, is_call);
        const double diff = p - price;
        if (std::abs(diff) < tol) return sigma;
        if (diff > 0.0) {
            hi = sigma;
        } else {
            lo = sigma;
        }
        const double vega = black_vega(spot, K, tau, sigma, df_dom, df_for);
        double next = sigma - diff / std::max(vega, 1e-300);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        sigma = next;
    }
    throw NumericError("implied_vol: did not converge");
}

DeltaSpec DeltaSpec::parse(const std::string& raw) {
    std::string text;
    for (char c : raw) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            text.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    DeltaSpec s;
    if (text == "ATM") {
        s.kind = Kind::Atm;
        return s;
    }
    if (text.rfind("K=", 0) == 0) {
        s.kind = Kind::Strike;
        try {
            s.strike = std::stod(text.substr(2));
        } catch (...) {
            throw ValidationError("delta spec: cannot parse strike in '" + raw + "'");
        }
        if (!(s.strike > 0.0)) throw ValidationError("delta spec: strike must be > 0");
        return s;
    }
    if (text.size() >= 3) {
        const std::string suffix = text.substr(text.size() - 2);
        if (suffix == "DC" || suffix == "DP") {
            double pct = 0.0;
            try {
                pct = std::stod(text.substr(0, text.size() - 2));
            } catch (...) {
                throw ValidationError("delta spec: cannot parse '" + raw + "'");
            }
            if (!(pct > 0.0 && pct < 100.0)) {
                throw ValidationError("delta spec: delta must lie in (0,100)");
            }
            s.kind = suffix == "DC" ? Kind::DeltaCall : Kind::DeltaPut;
            s.delta = pct / 100.0;
            return s;
        }
    }
    throw ValidationError("delta spec: cannot parse '" + raw + "'");
}

std::string DeltaSpec::str() const {
    switch (kind) {
        case Kind::Atm: return "ATM";
        case Kind::Strike: {
            std::ostringstream ss;
            ss << "K=" << strike;
            return ss.str();
        }
        case Kind::DeltaCall:
        case Kind::DeltaPut: {
            std::ostringstream ss;
            ss << std::lround(delta * 100.0) << (kind == Kind::DeltaCall ? "DC" : "DP");
            return ss.str();
        }
    }
    return "";
}

double strike_from_delta(const DeltaSpec& spec, double sigma, double spot, double tau,
                         double df_dom, double df_for) {
    if (!(sigma > 0.0 && spot > 0.0 && tau > 0.0)) {
        throw std::domain_error("strike_from_delta: requires sigma, spot, tau > 0");
    }
    const double F = spot * df_for / df_dom;
    const double stdev = sigma * std::sqrt(tau);
    switch (spec.kind) {
        case DeltaSpec::Kind::Strike: return spec.strike;
        case DeltaSpec::Kind::Atm: return F * std::exp(0.5 * stdev * stdev);
        case DeltaSpec::Kind::DeltaCall: {
            const double d1 = norm_inv_cdf(spec.delta);
            return F * std::exp(-d1 * stdev + 0.5 * stdev * stdev);
        }
        case DeltaSpec::Kind::DeltaPut: {
            const double d1 = -norm_inv_cdf(spec.delta);
            return F * std::exp(-d1 * stdev + 0.5 * stdev * stdev);
        }
    }
    throw std::logic_error("strike_from_delta: unreachable");
}

// ---- Fourier machinery ----------------------------------------------------

namespace {

// 15-point Kronrod / 7-point Gauss pair on [-1,1].
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

template <typename F>
void gk15(const F& f, double a, double b, double& integral, double& error) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resg = kWg[3] * fc;
    double resk = kWgk[7] * fc;
    for (int j = 0; j < 3; ++j) {
        const double x = h * kXgk[2 * j + 1];
        const double fs = f(c - x) + f(c + x);
        resg += kWg[j] * fs;
        resk += kWgk[2 * j + 1] * fs;
    }
    for (int j = 0; j < 4; ++j) {
        const double x = h * kXgk[2 * j];
        resk += kWgk[2 * j] * (f(c - x) + f(c + x));
    }
    integral = resk * h;
    error = std::abs(resk - resg) * h;
}

template <typename F>
double adaptive_gk(const F& f, double a, double b, double rel_tol, double abs_tol,
                   int max_depth, int depth = 0) {
    double integral = 0.0, error = 0.0;
    gk15(f, a, b, integral, error);
    if (error <= std::max(abs_tol, rel_tol * std::abs(integral)) || depth >= max_depth) {
        if (depth >= max_depth && error > 1e3 * std::max(abs_tol, rel_tol * std::abs(integral))) {
            throw NumericError("adaptive quadrature: panel did not converge");
        }
        return integral;
    }
    const double m = 0.5 * (a + b);
    return adaptive_gk(f, a, m, rel_tol, abs_tol * 0.5, max_depth, depth + 1) +
           adaptive_gk(f, m, b, rel_tol, abs_tol * 0.5, max_depth, depth + 1);
}

double residue_term(double alpha, double K, double phi_minus_i, double phi_zero) {
    if (alpha < -1.0) return phi_minus_i - K * phi_zero;
    if (alpha == -1.0) return phi_minus_i - 0.5 * K * phi_zero;
    if (alpha < 0.0) return phi_minus_i;
    if (alpha == 0.0) return 0.5 * phi_minus_i;
    return 0.0;
}

struct ContourSetup {
    MarketState state;
    std::vector<Complex> zeta;  // workspace, one per currency
    double phi_minus_i = 0.0;   // fair value of one unit of foreign currency
    double phi_zero = 0.0;      // domestic ZCB
};

// Validates the contour against the convergence strip and precomputes the
// two pole values phi(-i) and phi(0).
ContourSetup setup_contour(const Model42& m, int i, int j, const MarketState& state,
                           double tau, double alpha, const NumericPolicy& policy) {
    if (i == j || i < 0 || j < 0 || i >= m.N() || j >= m.N()) {
        throw std::invalid_argument("pricing: need two distinct currency indices");
    }
    if (alpha == 0.0 || alpha == -1.0) {
        throw std::domain_error("pricing: contour alpha in {0,-1} passes through a pole");
    }
    if (!(tau > 0.0)) throw std::domain_error("pricing: tau must be > 0");
    std::vector<double> w(m.N(), 0.0);
    w[i] = alpha;
    w[j] = -(1.0 + alpha);
    const auto verdict = charfn::strip_check(m, w, tau);
    if (!verdict.allows(tau)) {
        throw std::domain_error("pricing: contour alpha outside the convergence strip");
    }
    if (alpha > -1.0 && alpha < 0.0 &&
        !charfn::bond_moment_criterion(m, i, j, state, tau, alpha)) {
        throw std::domain_error("pricing: bond moment criterion fails at this maturity");
    }
    ContourSetup cs;
    cs.state = state;
    cs.zeta.assign(m.N(), Complex(0.0, 0.0));
    cs.phi_minus_i = charfn::discounted_cf(m, i, j, state, tau, Complex(0.0, -1.0), policy).real();
    cs.phi_zero = charfn::discounted_cf(m, i, j, state, tau, Complex(0.0, 0.0), policy).real();
    return cs;
}

double check_bounds(double price, double K, const ContourSetup& cs, double spot) {
    const double lower = std::max(0.0, cs.phi_minus_i - K * cs.phi_zero);
    const double upper = cs.phi_minus_i;
    const double tol = 1e-6 * spot;
    if (price < lower - tol || price > upper + tol) {
        std::ostringstream msg;
        msg << "pricing: price " << price << " violates arbitrage bounds [" << lower << ", "
            << upper << "]";
        throw NumericError(msg.str());
    }
    return std::clamp(price, lower, upper);
}

}  // namespace

double lee_call_price(const Model42& m, int i, int j, const MarketState& state, double tau,
                      double K, double alpha, const NumericPolicy& policy) {
    if (!(K > 0.0)) throw std::domain_error("lee_call_price: strike must be > 0");
    ContourSetup cs = setup_contour(m, i, j, state, tau, alpha, policy);
    const double k = std::log(K);
    const Complex iunit(0.0, 1.0);

    auto integrand = [&](double u) {
        const Complex z(u, -alpha);
        // phi(z - i) = e^{Y_i} Psi(zeta) with zeta_i = z, zeta_j = -(z - i)
        cs.zeta[i] = z;
        cs.zeta[j] = -(z - iunit);
        const Complex phi = std::exp(state.Y[i]) *
                            charfn::detail::joint_cf_nocheck(m, cs.state, tau, cs.zeta, policy);
        const Complex val = std::exp(-iunit * z * k) * phi / (-z * (z - iunit));
        return val.real();
    };

    double total = 0.0;
    const double W = policy.quad_panel_width;
    for (int p = 0; p < policy.quad_max_panels; ++p) {
        const double piece = adaptive_gk(integrand, p * W, (p + 1) * W, policy.quad_rel_tol,
                                         policy.quad_abs_tol, policy.quad_max_depth);
        total += piece;
        if (p > 0 && std::abs(piece) < policy.quad_tail_tol * std::max(1.0, std::abs(total))) {
            break;
        }
        if (p + 1 == policy.quad_max_panels) {
            throw NumericError("lee_call_price: integral tail did not decay within panel budget");
        }
    }

    const double price = residue_term(alpha, K, cs.phi_minus_i, cs.phi_zero) +
                         total / std::numbers::pi;
    const double spot = std::exp(state.Y[i] - state.Y[j]);
    return check_bounds(price, K, cs, spot);
}

double lee_put_price(const Model42& m, int i, int j, const MarketState& state, double tau,
                     double K, double alpha, const NumericPolicy& policy) {
    ContourSetup cs = setup_contour(m, i, j, state, tau, alpha, policy);
    const double call = lee_call_price(m, i, j, state, tau, K, alpha, policy);
    return call - cs.phi_minus_i + K * cs.phi_zero;
}

namespace {

void fft_radix2(std::vector<Complex>& x) {
    const size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("fft: size must be a power of two");
    }
    for (size_t i = 1, jj = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; jj & bit; bit >>= 1) jj ^= bit;
        jj ^= bit;
        if (i < jj) std::swap(x[i], x[jj]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const Complex wlen = std::polar(1.0, ang);
        for (size_t blk = 0; blk < n; blk += len) {
            Complex w(1.0, 0.0);
            for (size_t q = 0; q < len / 2; ++q) {
                const Complex u = x[blk + q];
                const Complex v = w * x[blk + q + len / 2];
                x[blk + q] = u + v;
                x[blk + q + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

std::vector<double> fft_call_prices(const Model42& m, int i, int j, const MarketState& state,
                                    double tau, const FftConfig& cfg,
                                    const std::vector<double>& strikes,
                                    const NumericPolicy& policy) {
    const int N = cfg.n_points;
    if (N <= 0 || (N & (N - 1)) != 0) {
        throw ValidationError("fft_call_prices: n_points must be a power of two");
    }
    if (!(cfg.eta > 0.0)) throw ValidationError("fft_call_prices: eta must be > 0");
    const double alpha = cfg.alpha;
    ContourSetup cs = setup_contour(m, i, j, state, tau, alpha, policy);
    const Complex iunit(0.0, 1.0);
    const double eta = cfg.eta;
    const double lambda = 2.0 * std::numbers::pi / (N * eta);
    const double b = 0.5 * N * lambda;
    const double spot = std::exp(state.Y[i] - state.Y[j]);

    // Simpson-weighted samples of the damped transform on the u grid.
    std::vector<Complex> g(N);
    for (int q = 0; q < N; ++q) {
        const double u = q * eta;
        const Complex z(u, -alpha);
        cs.zeta[i] = z;
        cs.zeta[j] = -(z - iunit);
        const Complex phi = std::exp(state.Y[i]) *
                            charfn::detail::joint_cf_nocheck(m, cs.state, tau, cs.zeta, policy);
        const double simpson = (3.0 + ((q % 2 == 0) ? -1.0 : 1.0) - (q == 0 ? 1.0 : 0.0)) / 3.0;
        g[q] = phi / (-z * (z - iunit)) * (eta * simpson);
    }

    std::vector<double> out;
    out.reserve(strikes.size());

    if (cfg.interp == FftConfig::Interp::Linear) {
        std::vector<Complex> x(g);
        for (int q = 0; q < N; ++q) x[q] *= std::polar(1.0, b * q * eta);
        fft_radix2(x);
        auto grid_price = [&](int mdx) {
            const double km = -b + lambda * mdx;
            return residue_term(alpha, std::exp(km), cs.phi_minus_i, cs.phi_zero) +
                   std::exp(-alpha * km) * x[mdx].real() / std::numbers::pi;
        };
        for (double K : strikes) {
            if (!(K > 0.0)) throw std::domain_error("fft_call_prices: strike must be > 0");
            const double k = std::log(K);
            const double pos = (k + b) / lambda;
            const int m0 = static_cast<int>(std::floor(pos));
            if (m0 < 0 || m0 + 1 >= N) {
                throw std::domain_error("fft_call_prices: strike outside the FFT grid");
            }
            const double frac = pos - m0;
            const double price = (1.0 - frac) * grid_price(m0) + frac * grid_price(m0 + 1);
            out.push_back(check_bounds(price, K, cs, spot));
        }
        return out;
    }

    // Exact mode: evaluate the same Simpson-weighted sum at each requested
    // log-strike, so no interpolation error enters.
    for (double K : strikes) {
        if (!(K > 0.0)) throw std::domain_error("fft_call_prices: strike must be > 0");
        const double k = std::log(K);
        double acc = 0.0;
        for (int q = 0; q < N; ++q) {
            acc += (std::polar(1.0, -q * eta * k) * g[q]).real();
        }
        const double price = residue_term(alpha, K, cs.phi_minus_i, cs.phi_zero) +
                             std::exp(-alpha * k) * acc / std::numbers::pi;
        out.push_back(check_bounds(price, K, cs, spot));
    }
    return out;
}

// ---- Zero coupon bonds ----------------------------------------------------

double zcb_real_world(const Model42& m, int i, const MarketState& state, double tau,
                      const NumericPolicy& policy) {
    if (i < 0 || i >= m.N()) throw std::out_of_range("zcb_real_world: bad currency index");
    if (tau == 0.0) return 1.0;
    std::vector<Complex> zeta(m.N(), Complex(0.0, 0.0));
    zeta[i] = Complex(0.0, 1.0);
    const Complex psi = charfn::joint_cf(m, state, tau, zeta, policy);
    return std::exp(state.Y[i]) * psi.real();
}

double zcb_ba_rn_ratio(const Model42& m, int i, const MarketState& state, double tau,
                       const NumericPolicy& policy) {
    if (i < 0 || i >= m.N()) throw std::out_of_range("zcb_ba_rn_ratio: bad currency index");
    if (tau == 0.0) return 1.0;
    std::vector<Complex> zeta(m.N(), Complex(0.0, 0.0));
    zeta[i] = Complex(0.0, 1.0);
    return charfn::factor_product(m, state.V, tau, zeta, policy).real();
}

double zcb_closed_form_ratio(const Model42& m, int i, double V2, double tau,
                             const NumericPolicy& policy) {
    model::require_valid(m);
    if (i < 0 || i >= m.N()) throw std::out_of_range("zcb_closed_form_42: bad currency index");
    if (m.d() != 2) throw ValidationError("zcb_closed_form_42: requires a two-factor model");
    const auto& c = m.currencies[i];
    for (int k = 0; k < 2; ++k) {
        if (c.H[k] != 0.0 || c.G[k] != 0.0) {
            throw ValidationError("zcb_closed_form_42: requires H = G = 0 (constant rate)");
        }
    }
    const auto& f1 = m.factors[0];
    const auto& f2 = m.factors[1];
    const double q1 = f1.kappa * f1.theta - 0.5 * f1.sigma * f1.sigma - f1.rho * f1.sigma * c.b[0];
    const double q2 = f2.kappa * f2.theta - 0.5 * f2.sigma * f2.sigma - f2.rho * f2.sigma * c.b[1];
    if (q1 < 0.0) {
        throw ValidationError(
            "zcb_closed_form_42: factor-1 identity 1/2 + m1/2 - alpha1 + kappa theta/sigma^2 "
            "= m1 + 1 fails (needs kappa1 theta1 - sigma1^2/2 - rho1 sigma1 b1 >= 0)");
    }
    if (q2 > 0.0) {
        throw ValidationError(
            "zcb_closed_form_42: factor-2 identity 1/2 + m2/2 - alpha2 + kappa theta/sigma^2 "
            "= 1 fails (needs kappa2 theta2 - sigma2^2/2 - rho2 sigma2 b2 <= 0)");
    }
    const double sqrtA2 = f2.kappa + f2.sigma * f2.rho * c.a[1];
    if (!(sqrtA2 > 0.0)) {
        throw ValidationError("zcb_closed_form_42: kappa2 + sigma2 rho2 a2 must be > 0");
    }
    if (!(V2 > 0.0)) throw std::domain_error("zcb_closed_form_42: V2 must be > 0");
    if (tau < 0.0) throw std::domain_error("zcb_closed_form_42: tau must be >= 0");
    if (tau == 0.0) return 1.0;

    const double m2 = -2.0 * q2 / (f2.sigma * f2.sigma);
    const double st = sqrtA2 * tau;
    if (st > 700.0) return 0.0;
    const double x = V2 * (2.0 * sqrtA2 / (f2.sigma * f2.sigma)) / std::expm1(st);
    return specfun::reg_lower_inc_gamma(m2, x, policy);
}

double zcb_closed_form_42(const Model42& m, int i, double V2, double tau,
                          const NumericPolicy& policy) {
    return std::exp(-m.currencies[i].h * tau) * zcb_closed_form_ratio(m, i, V2, tau, policy);
}

double zcb_formal_risk_neutral(double r, double tau) { return std::exp(-r * tau); }

}  // namespace fx42::pricing
