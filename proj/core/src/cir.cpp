#include "fx42/cir.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fx42/errors.hpp"
#include "fx42/specfun.hpp"

namespace fx42::cir {

void validate(const CirFactor& f) {
    const bool ok = f.kappa > 0.0 && f.theta > 0.0 && f.sigma > 0.0 && f.v0 > 0.0 &&
                    std::abs(f.rho) <= 1.0;
    if (ok) return;
    std::ostringstream bad;
    if (!(f.kappa > 0.0)) bad << "kappa must be > 0; ";
    if (!(f.theta > 0.0)) bad << "theta must be > 0; ";
    if (!(f.sigma > 0.0)) bad << "sigma must be > 0; ";
    if (!(f.v0 > 0.0)) bad << "v0 must be > 0; ";
    if (!(std::abs(f.rho) <= 1.0)) bad << "rho must lie in [-1,1]; ";
    throw ValidationError("CirFactor: " + bad.str());
}

double feller_gap(const CirFactor& f) {
    return 2.0 * f.kappa * f.theta - f.sigma * f.sigma;
}

DomainVerdict transform_domain(const CirFactor& f, const TransformArgs& args) {
    // Conditions are stated for the drift/diffusion normalization
    // dX = (a - bX)dt + sqrt(2 sD X)dW with a = kappa*theta, b = kappa,
    // sD = sigma^2/2. Complex exponents are screened through their real
    // parts, which bound the modulus of the integrand.
    const double a = f.kappa * f.theta;
    const double b = f.kappa;
    const double s2 = f.sigma * f.sigma;

    const double al = args.alpha.real();
    const double la = args.lambda.real();
    const double mu = args.mu.real();
    const double nu = args.nu.real();

    const double disc_mu = b * b + 2.0 * s2 * mu;              // b^2 + 4 mu sD
    const double disc_nu = (a - s2 / 2.0) * (a - s2 / 2.0) + 2.0 * s2 * nu;

    DomainVerdict v;
    if (disc_mu < 0.0) {
        v.status = DomainStatus::Invalid;
        v.reason = "mu condition failed: b^2 + 4*mu*sigma_D < 0";
        return v;
    }
    if (disc_nu < 0.0) {
        v.status = DomainStatus::Invalid;
        v.reason = "nu condition failed: (a - sigma_D)^2 + 4*sigma_D*nu < 0";
        return v;
    }
    const double alpha_bound = 0.5 + a / s2 + std::sqrt(disc_nu) / s2;
    if (!(alpha_bound > al)) {
        v.status = DomainStatus::Invalid;
        v.reason = "alpha condition failed: 1/2 + a/(2 sigma_D) + sqrt(...)/(2 sigma_D) <= alpha";
        return v;
    }
    const double lambda_bound = -(std::sqrt(disc_mu) + b) / s2;
    if (la >= lambda_bound) {
        v.status = DomainStatus::ValidAllT;
        return v;
    }
    // Only the lambda condition fails: finite explosion time.
    const double sA = std::sqrt(disc_mu);
    const double denom = b + s2 * la + sA;  // b + 2 sigma_D lambda + sqrt(A), < 0 here
    v.status = DomainStatus::ValidUntil;
    v.t_star = std::log(1.0 - 2.0 * sA / denom) / sA;
    return v;
}

namespace {

// Pieces of the closed form that need a stable evaluation for large
// |sqrt(A)| tau: everything is combined in log space, with sinh/coth
// expressed through E = exp(-sqrt(A) tau) so nothing overflows.
struct TransformBlocks {
    Complex ln_beta_half;   // log(beta/2)
    Complex s_coth;         // sqrt(A) * coth(sqrt(A) tau / 2)
    Complex w;              // beta^2 / (4 (lambda + K))
    Complex lambda_plus_K;
};

TransformBlocks blocks(const CirFactor& f, Complex s, Complex lambda, double x, double tau) {
    TransformBlocks tb;
    const double s2 = f.sigma * f.sigma;
    const Complex stau = s * tau;
    if (std::abs(stau) < 1e-5) {
        // sinh(y) ~ y (1 + y^2/6), coth(y) ~ 1/y + y/3 for y = s tau / 2
        const Complex y2 = stau * stau;
        tb.ln_beta_half = std::log(2.0 * std::sqrt(x) / (s2 * tau)) - y2 / 24.0;
        tb.s_coth = 2.0 / tau + s * s * tau / 6.0;
    } else {
        const Complex E = std::exp(-stau);
        tb.ln_beta_half = std::log(s) + 0.5 * std::log(x) - std::log(s2) +
                          std::numbers::ln2 - stau / 2.0 - std::log(1.0 - E);
        tb.s_coth = s * (1.0 + E) / (1.0 - E);
    }
    tb.lambda_plus_K = lambda + (tb.s_coth + f.kappa) / s2;
    tb.w = std::exp(2.0 * tb.ln_beta_half) / tb.lambda_plus_K;
    return tb;
}

}  // namespace

Complex general_transform(const CirFactor& f, const TransformArgs& args,
                          const NumericPolicy& policy) {
    validate(f);
    const DomainVerdict verdict = transform_domain(f, args);
    if (verdict.status == DomainStatus::Invalid) {
        throw std::domain_error("general_transform: " + verdict.reason);
    }
    if (verdict.status == DomainStatus::ValidUntil && !(args.tau < verdict.t_star)) {
        throw std::domain_error("general_transform: tau beyond explosion time t*");
    }

    const double x = f.v0;
    if (args.tau == 0.0) {
        // The closed form is 0/0 at tau = 0; the transform degenerates to
        // the integrand evaluated at the initial state.
        return std::exp(-args.alpha * std::log(x) - args.lambda * x);
    }

    const double s2 = f.sigma * f.sigma;
    const double kt_over_s2 = f.kappa * f.theta / s2;

    const double half_gap = f.kappa * f.theta - s2 / 2.0;
    const Complex disc = half_gap * half_gap + 2.0 * s2 * args.nu;
    const Complex m = 2.0 * std::sqrt(disc) / s2;
    const Complex A = Complex(f.kappa * f.kappa, 0.0) + 2.0 * args.mu * s2;
    const Complex s = std::sqrt(A);
    const Complex g = 0.5 + m / 2.0 - args.alpha + kt_over_s2;

    const TransformBlocks tb = blocks(f, s, args.lambda, x, args.tau);
    if (std::abs(tb.lambda_plus_K) == 0.0) {
        throw NumericError("general_transform: lambda + K vanished (explosion boundary)");
    }

    const Complex ln_value =
        (m + 1.0) * tb.ln_beta_half - kt_over_s2 * std::log(x) -
        g * std::log(tb.lambda_plus_K) +
        (f.kappa * f.kappa * f.theta * args.tau - tb.s_coth * x + f.kappa * x) / s2 +
        specfun::ln_gamma(g) - specfun::ln_gamma(m + 1.0) +
        specfun::ln_hyp1f1(g, m + 1.0, tb.w, policy);

    if (ln_value.real() > 700.0) {
        throw NumericError("general_transform: result overflows double");
    }
    return std::exp(ln_value);
}

}  // namespace fx42::cir
