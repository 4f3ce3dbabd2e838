#include "fx42/hedging.hpp"

#include <cmath>
#include <sstream>

#include "fx42/errors.hpp"
#include "fx42/pricing.hpp"
#include "fx42/specfun.hpp"

namespace fx42::hedging {

namespace {

struct BondConfig {
    double q2 = 0.0;      // kappa2 theta2 - sigma2^2/2 - rho2 sigma2 b2
    double m2 = 0.0;      // 2|q2|/sigma2^2 (gamma form only)
    double sqrtA2 = 0.0;  // kappa2 + sigma2 rho2 a2
    bool gamma_form = false;  // factor 2 in the incomplete-gamma regime
};

BondConfig bond_config(const Model42& m, int domestic) {
    model::require_valid(m);
    if (m.d() != 2) throw ValidationError("hedging: requires a two-factor model");
    if (domestic < 0 || domestic >= m.N()) {
        throw std::out_of_range("hedging: bad domestic currency index");
    }
    const auto& c = m.currencies[domestic];
    for (int k = 0; k < 2; ++k) {
        if (c.H[k] != 0.0 || c.G[k] != 0.0) {
            throw ValidationError("hedging: requires H = G = 0 (constant domestic rate)");
        }
    }
    const auto& f1 = m.factors[0];
    const auto& f2 = m.factors[1];
    const double q1 = f1.kappa * f1.theta - 0.5 * f1.sigma * f1.sigma - f1.rho * f1.sigma * c.b[0];
    if (q1 < 0.0) {
        throw ValidationError(
            "hedging: factor-1 block must drop out of the bond transform "
            "(kappa1 theta1 - sigma1^2/2 - rho1 sigma1 b1 >= 0)");
    }
    BondConfig bc;
    bc.q2 = f2.kappa * f2.theta - 0.5 * f2.sigma * f2.sigma - f2.rho * f2.sigma * c.b[1];
    bc.gamma_form = bc.q2 <= 0.0;
    bc.sqrtA2 = f2.kappa + f2.sigma * f2.rho * c.a[1];
    if (bc.gamma_form) {
        bc.m2 = -2.0 * bc.q2 / (f2.sigma * f2.sigma);
        if (!(bc.sqrtA2 > 0.0)) {
            throw ValidationError("hedging: kappa2 + sigma2 rho2 a2 must be > 0");
        }
    }
    return bc;
}

// Closed-form bond quotient P(t,T) / exp(-h tau) for the hedge configuration.
double bond_ratio(const Model42& m, int domestic, const BondConfig& bc, double V2, double tau,
                  const NumericPolicy& policy) {
    if (!bc.gamma_form) return 1.0;
    return pricing::zcb_closed_form_ratio(m, domestic, V2, tau, policy);
}

}  // namespace

HedgeCoeffs bond_diffusion_coeffs(const Model42& m, int domestic, std::array<double, 2> V,
                                  double D_dom, double tau, const NumericPolicy& policy) {
    const BondConfig bc = bond_config(m, domestic);
    if (!(V[0] > 0.0 && V[1] > 0.0)) throw std::domain_error("hedging: V must be > 0");
    if (!(D_dom > 0.0)) throw std::domain_error("hedging: D_dom must be > 0");
    if (tau < 0.0) throw std::domain_error("hedging: tau must be >= 0");
    const auto& c = m.currencies[domestic];
    const auto& f2 = m.factors[1];

    const double disc = std::exp(-c.h * tau);
    const double ratio = bond_ratio(m, domestic, bc, V[1], tau, policy);
    HedgeCoeffs out;
    out.psi = disc * ratio / D_dom;

    const double pi1 = c.a[0] * std::sqrt(V[0]) + c.b[0] / std::sqrt(V[0]);
    const double pi2 = c.a[1] * std::sqrt(V[1]) + c.b[1] / std::sqrt(V[1]);
    out.x1 = -out.psi * pi1;
    out.x2 = -out.psi * pi2;

    // V2 sensitivity. Only the incomplete-gamma regime carries one; in the
    // true-martingale regime the bond is pure discounting.
    double sens = 0.0;
    if (bc.gamma_form && tau > 0.0 && bc.sqrtA2 * tau < 700.0) {
        const double cc = (2.0 * bc.sqrtA2 / (f2.sigma * f2.sigma)) / std::expm1(bc.sqrtA2 * tau);
        const double u = cc * V[1];
        // d/dV2 of P(m2, c V2) = c u^{m2-1} e^{-u} / Gamma(m2)
        const double log_term = bc.m2 * std::log(cc) + (bc.m2 - 0.5) * std::log(V[1]) - u -
                                specfun::ln_gamma(bc.m2);
        sens = disc / D_dom * std::exp(log_term) * f2.sigma;
    }
    out.x2 += sens * f2.rho;
    out.x3 = sens * std::sqrt(1.0 - f2.rho * f2.rho);
    return out;
}

Matrix3 phi_matrix(const Model42& m, std::array<double, 2> V) {
    model::require_valid(m);
    if (m.N() != 3 || m.d() != 2) {
        throw ValidationError("phi_matrix: requires N = 3 currencies and d = 2 factors");
    }
    if (!(V[0] > 0.0 && V[1] > 0.0)) throw std::domain_error("phi_matrix: V must be > 0");
    Matrix3 phi{};
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 2; ++k) {
            phi[i][k] =
                m.currencies[i].a[k] * std::sqrt(V[k]) + m.currencies[i].b[k] / std::sqrt(V[k]);
        }
        phi[i][2] = 1.0;
    }
    return phi;
}

namespace {

double norm1(const Matrix3& a) {
    double best = 0.0;
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r) s += std::abs(a[r][c]);
        best = std::max(best, s);
    }
    return best;
}

// Inverse by adjugate; throws when the matrix is numerically singular.
Matrix3 inverse3(const Matrix3& a) {
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (det == 0.0) throw NumericError("hedging: Phi matrix is singular");
    Matrix3 inv;
    inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    return inv;
}

std::array<double, 3> solve_transposed(const Matrix3& phi, const std::array<double, 3>& rhs,
                                       double condition_limit) {
    const Matrix3 inv = inverse3(phi);
    const double cond = norm1(phi) * norm1(inv);
    if (cond > condition_limit) {
        std::ostringstream msg;
        msg << "hedging: Phi matrix ill conditioned (cond ~ " << cond << ")";
        throw NumericError(msg.str());
    }
    // Solve Phi^T y = rhs, i.e. y = (Phi^T)^-1 rhs = (Phi^-1)^T rhs.
    std::array<double, 3> y{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) y[r] += inv[c][r] * rhs[c];
    }
    return y;
}

}  // namespace

std::array<double, 3> strategy_vector(const Model42& m, int domestic, const HedgeState& state,
                                      double tau, const NumericPolicy& policy) {
    const HedgeCoeffs hc =
        bond_diffusion_coeffs(m, domestic, state.V, state.D_dom, tau, policy);
    const Matrix3 phi = phi_matrix(m, state.V);
    const std::array<double, 3> xi{-hc.x1, -hc.x2, hc.psi - state.eta};
    const auto y = solve_transposed(phi, xi, policy.condition_limit);
    std::array<double, 3> theta{};
    for (int i = 0; i < 3; ++i) {
        if (!(state.bhat[i] > 0.0)) throw std::domain_error("strategy_vector: bhat must be > 0");
        theta[i] = y[i] / state.bhat[i];
    }
    return theta;
}

BacktestResult backtest(const Model42& m, int domestic, const mc::PathBundle& bundle, double T,
                        const NumericPolicy& policy) {
    const BondConfig bc = bond_config(m, domestic);
    if (m.N() != 3) throw ValidationError("backtest: requires N = 3 currencies");
    if (bundle.N != m.N() || bundle.d != m.d()) {
        throw ValidationError("backtest: bundle shape does not match the model");
    }
    if (bundle.times.empty() || bundle.times.back() + 1e-12 < T) {
        throw ValidationError("backtest: bundle horizon shorter than T");
    }
    int last = 0;
    while (last + 1 < bundle.n_times() && bundle.times[last + 1] <= T + 1e-12) ++last;

    BacktestResult res;
    res.terminal_error.resize(bundle.n_paths);
    res.eta_T.resize(bundle.n_paths);

    // Pooled accumulators for corr(d eta, d Bhat^j).
    std::array<double, 3> s_b{}, s_bb{}, s_eb{};
    double s_e = 0.0, s_ee = 0.0;
    long n_incr = 0;

    for (int p = 0; p < bundle.n_paths; ++p) {
        double eta = 0.0;
        std::array<double, 3> theta{};
        std::array<double, 3> bhat_prev{};
        double psi_prev = 0.0;
        for (int n = 0; n <= last; ++n) {
            const double t = bundle.times[n];
            const double tau = T - t;
            const std::array<double, 2> V{bundle.v(p, n, 0), bundle.v(p, n, 1)};
            const double d_dom = std::exp(bundle.y(p, n, domestic));
            std::array<double, 3> bhat{};
            for (int i = 0; i < 3; ++i) bhat[i] = bundle.bhat(p, n, i);

            const double psi =
                std::exp(-m.currencies[domestic].h * tau) *
                bond_ratio(m, domestic, bc, V[1], tau, policy) / d_dom;
            if (n > 0) {
                double gain = 0.0;
                for (int i = 0; i < 3; ++i) gain += theta[i] * (bhat[i] - bhat_prev[i]);
                const double d_eta = (psi - psi_prev) - gain;
                eta += d_eta;
                s_e += d_eta;
                s_ee += d_eta * d_eta;
                for (int i = 0; i < 3; ++i) {
                    const double db = bhat[i] - bhat_prev[i];
                    s_b[i] += db;
                    s_bb[i] += db * db;
                    s_eb[i] += d_eta * db;
                }
                ++n_incr;
            }
            if (n < last) {
                const HedgeCoeffs hc = bond_diffusion_coeffs(m, domestic, V, d_dom, tau, policy);
                const Matrix3 phi = phi_matrix(m, V);
                const std::array<double, 3> xi{-hc.x1, -hc.x2, hc.psi - eta};
                const auto y = solve_transposed(phi, xi, policy.condition_limit);
                for (int i = 0; i < 3; ++i) theta[i] = y[i] / bhat[i];
                double port = eta;
                for (int i = 0; i < 3; ++i) port += theta[i] * bhat[i];
                res.max_reconstruction_error = std::max(
                    res.max_reconstruction_error, std::abs(port - psi) / std::abs(psi));
                if (p == 0 && n == 0) {
                    res.initial_cost = (port - eta) * d_dom;
                }
            }
            bhat_prev = bhat;
            psi_prev = psi;
        }
        res.eta_T[p] = eta;
        // Terminal claim is 1 unit of domestic currency; the self-financing
        // part delivers psi_T - eta_T, so the shortfall in domestic units is:
        res.terminal_error[p] = eta * std::exp(bundle.y(p, last, domestic));
    }

    const auto est = mc::estimate(res.eta_T);
    res.mean_error = est.mean;
    res.std_error = est.std_error;
    const double n = static_cast<double>(n_incr);
    for (int i = 0; i < 3; ++i) {
        const double cov = s_eb[i] / n - (s_e / n) * (s_b[i] / n);
        const double var_e = s_ee / n - (s_e / n) * (s_e / n);
        const double var_b = s_bb[i] / n - (s_b[i] / n) * (s_b[i] / n);
        res.eta_bhat_corr[i] = cov / std::sqrt(std::max(var_e * var_b, 1e-300));
    }
    return res;
}

}  // namespace fx42::hedging
