#include "fx42/charfn.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fx42/errors.hpp"

namespace fx42::charfn {

namespace {

// Shared evaluation of the per-factor exponent sums. The strip functions are
// these same sums at a real argument, so both paths go through here.
FactorCoefficients factor_coeffs(const Model42& m, int k, std::span<const Complex> iz) {
    const auto& f = m.factors[k];
    const double sg = f.sigma;
    const double half_gap = f.kappa * f.theta - sg * sg / 2.0;

    Complex Sa{}, Sb{}, Sab{}, lin_mu{}, lin_nu{}, Sba{};
    for (int i = 0; i < m.N(); ++i) {
        const auto& c = m.currencies[i];
        Sa += iz[i] * c.a[k];
        Sb += iz[i] * c.b[k];
        Sab += iz[i] * c.a[k] * c.b[k];
        Sba += iz[i] * (c.b[k] - f.theta * c.a[k]);
        lin_mu += iz[i] * (c.H[k] + 0.5 * c.a[k] * c.a[k] + f.rho * c.a[k] * f.kappa / sg);
        lin_nu += iz[i] * (c.G[k] + 0.5 * c.b[k] * c.b[k] - f.rho * c.b[k] * half_gap / sg);
    }
    const double one_m_rho2 = 1.0 - f.rho * f.rho;

    FactorCoefficients fc;
    fc.alpha = -(f.rho / sg) * Sb;
    fc.lambda = -(f.rho / sg) * Sa;
    fc.mu = -(lin_mu + 0.5 * one_m_rho2 * Sa * Sa);
    fc.nu = -(lin_nu + 0.5 * one_m_rho2 * Sb * Sb);
    fc.drift = one_m_rho2 * Sa * Sb + Sab + (f.kappa * f.rho / sg) * Sba;
    fc.A = f.kappa * f.kappa + 2.0 * fc.mu * sg * sg;
    fc.m = 2.0 * std::sqrt(half_gap * half_gap + 2.0 * sg * sg * fc.nu) / (sg * sg);
    return fc;
}

}  // namespace

TransformCoefficients coefficients(const Model42& m, std::span<const Complex> zeta) {
    model::require_valid(m);
    if (static_cast<int>(zeta.size()) != m.N()) {
        throw std::invalid_argument("coefficients: zeta must have one entry per currency");
    }
    TransformCoefficients tc;
    tc.izeta.resize(m.N());
    const Complex iunit(0.0, 1.0);
    for (int i = 0; i < m.N(); ++i) tc.izeta[i] = iunit * zeta[i];
    tc.factor.reserve(m.d());
    for (int k = 0; k < m.d(); ++k) tc.factor.push_back(factor_coeffs(m, k, tc.izeta));
    return tc;
}

StripVerdict strip_check(const Model42& m, std::span<const double> w, double tau) {
    model::require_valid(m);
    if (static_cast<int>(w.size()) != m.N()) {
        throw std::invalid_argument("strip_check: w must have one entry per currency");
    }
    // Evaluate the coefficient sums at the real point i*zeta = w.
    std::vector<Complex> iz(w.size());
    for (size_t i = 0; i < w.size(); ++i) iz[i] = Complex(w[i], 0.0);

    StripVerdict v;
    double t_star = std::numeric_limits<double>::infinity();
    bool has_explosion = false;
    for (int k = 0; k < m.d(); ++k) {
        const auto& f = m.factors[k];
        const double s2 = f.sigma * f.sigma;
        const FactorCoefficients fc = factor_coeffs(m, k, iz);
        const double f1 = fc.A.real();
        const double half_gap = f.kappa * f.theta - s2 / 2.0;
        const double f2 = half_gap * half_gap + 2.0 * s2 * fc.nu.real();
        std::ostringstream tag;
        tag << "factor " << k << ": ";
        if (!(f1 > 0.0)) {
            v.failures.push_back(tag.str() + "f1 <= 0");
            continue;
        }
        if (f2 < 0.0) {
            v.failures.push_back(tag.str() + "f2 < 0");
            continue;
        }
        const double f3 = (f.kappa * f.theta + s2 / 2.0 + std::sqrt(f2)) / s2;
        if (!(f3 - fc.alpha.real() > 0.0)) {
            v.failures.push_back(tag.str() + "f3 <= alpha");
            continue;
        }
        const double lam = fc.lambda.real();
        const double f4 = lam + (std::sqrt(f1) + f.kappa) / s2;
        if (f4 < 0.0) {
            has_explosion = true;
            const double sA = std::sqrt(f1);
            const double denom = f.kappa + s2 * lam + sA;  // negative here
            t_star = std::min(t_star, std::log(1.0 - 2.0 * sA / denom) / sA);
            v.failures.push_back(tag.str() + "f4 < 0 (finite explosion time)");
        }
    }
    // Any f1-f3 failure invalidates outright; a pure f4 failure leaves a
    // window [0, t*).
    for (const auto& s : v.failures) {
        if (s.find("f4") == std::string::npos) {
            v.status = DomainStatus::Invalid;
            return v;
        }
    }
    if (has_explosion) {
        v.status = DomainStatus::ValidUntil;
        v.t_star = t_star;
        (void)tau;
        return v;
    }
    v.status = DomainStatus::ValidAllT;
    return v;
}

namespace {

Complex factor_product_nocheck(const Model42& m, std::span<const double> V, double tau,
                               std::span<const Complex> zeta, const NumericPolicy& policy) {
    std::vector<Complex> iz(m.N());
    const Complex iunit(0.0, 1.0);
    for (int i = 0; i < m.N(); ++i) iz[i] = iunit * zeta[i];
    Complex out(1.0, 0.0);
    for (int k = 0; k < m.d(); ++k) {
        const FactorCoefficients fc = factor_coeffs(m, k, iz);
        cir::CirFactor f = m.factors[k];
        if (!(V[k] > 0.0)) throw std::domain_error("factor_product: V must be > 0");
        f.v0 = V[k];
        const cir::TransformArgs args{fc.alpha, fc.lambda, fc.mu, fc.nu, tau};
        const Complex block = std::exp(tau * fc.drift + fc.lambda * V[k] +
                                       fc.alpha * std::log(V[k])) *
                              cir::general_transform(f, args, policy);
        out *= block;
    }
    return out;
}

}  // namespace

Complex factor_product(const Model42& m, std::span<const double> V, double tau,
                       std::span<const Complex> zeta, const NumericPolicy& policy) {
    model::require_valid(m);
    if (static_cast<int>(zeta.size()) != m.N()) {
        throw std::invalid_argument("factor_product: zeta must have one entry per currency");
    }
    if (static_cast<int>(V.size()) != m.d()) {
        throw std::invalid_argument("factor_product: V must have one entry per factor");
    }
    return factor_product_nocheck(m, V, tau, zeta, policy);
}

namespace detail {

Complex joint_cf_nocheck(const Model42& m, const MarketState& state, double tau,
                         std::span<const Complex> zeta, const NumericPolicy& policy) {
    Complex drift{};
    const Complex iunit(0.0, 1.0);
    for (size_t i = 0; i < zeta.size(); ++i) {
        drift += iunit * zeta[i] * (state.Y[i] + m.currencies[i].h * tau);
    }
    return std::exp(drift) * factor_product_nocheck(m, state.V, tau, zeta, policy);
}

}  // namespace detail

Complex joint_cf(const Model42& m, const MarketState& state, double tau,
                 std::span<const Complex> zeta, const NumericPolicy& policy) {
    if (tau < 0.0) throw std::domain_error("joint_cf: tau must be >= 0");
    model::require_valid(m);
    if (static_cast<int>(zeta.size()) != m.N() || static_cast<int>(state.Y.size()) != m.N() ||
        static_cast<int>(state.V.size()) != m.d()) {
        throw std::invalid_argument("joint_cf: zeta/state shapes must match the model");
    }
    std::vector<double> w(zeta.size());
    for (size_t i = 0; i < zeta.size(); ++i) w[i] = -zeta[i].imag();
    const StripVerdict verdict = strip_check(m, w, tau);
    if (!verdict.allows(tau)) {
        std::ostringstream msg;
        msg << "joint_cf: transform not defined at tau=" << tau << ":";
        for (const auto& s : verdict.failures) msg << " [" << s << "]";
        throw std::domain_error(msg.str());
    }
    return detail::joint_cf_nocheck(m, state, tau, zeta, policy);
}

Complex discounted_cf(const Model42& m, int i, int j, const MarketState& state, double tau,
                      Complex z, const NumericPolicy& policy) {
    if (i == j || i < 0 || j < 0 || i >= m.N() || j >= m.N()) {
        throw std::invalid_argument("discounted_cf: need two distinct currency indices");
    }
    std::vector<Complex> zeta(m.N(), Complex(0.0, 0.0));
    zeta[i] = z + Complex(0.0, 1.0);
    zeta[j] = -z;
    return std::exp(state.Y[i]) * joint_cf(m, state, tau, zeta, policy);
}

bool bond_moment_criterion(const Model42& m, int i, int j, const MarketState& state, double tau,
                           double alpha) {
    if (!(alpha > -1.0 && alpha < 0.0)) {
        throw std::domain_error("bond_moment_criterion: alpha must lie in (-1,0)");
    }
    (void)state;
    if (tau == 0.0) return true;
    for (int c : {i, j}) {
        std::vector<double> w(m.N(), 0.0);
        w[c] = -1.0;  // zeta = i e_c  =>  -Im(zeta) = -e_c
        if (!strip_check(m, w, tau).allows(tau)) return false;
    }
    return true;
}

}  // namespace fx42::charfn
