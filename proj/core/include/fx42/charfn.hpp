#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "fx42/cir.hpp"
#include "fx42/model.hpp"
#include "fx42/policy.hpp"

namespace fx42::charfn {

using Complex = std::complex<double>;
using cir::DomainStatus;
using model::MarketState;
using model::Model42;

/// Per-factor exponents of the joint transform for a given frequency vector
/// zeta, together with the derived quantities m_k and A_k and the factor's
/// deterministic drift contribution (the part of the exponent linear in tau
/// that does not come from the square-root transform itself).
struct FactorCoefficients {
    Complex alpha, lambda, mu, nu;
    Complex m, A;
    Complex drift;
};

struct TransformCoefficients {
    std::vector<Complex> izeta;            // i * zeta, per currency
    std::vector<FactorCoefficients> factor;  // per factor
};

TransformCoefficients coefficients(const Model42& m, std::span<const Complex> zeta);

/// Convergence-strip verdict at the real point w = -Im(zeta).
struct StripVerdict {
    DomainStatus status = DomainStatus::ValidAllT;
    double t_star = 0.0;
    std::vector<std::string> failures;  // labels of failed conditions

    bool allows(double tau) const {
        return status == DomainStatus::ValidAllT ||
               (status == DomainStatus::ValidUntil && tau < t_star);
    }
};

StripVerdict strip_check(const Model42& m, std::span<const double> minus_im_zeta, double tau);

/// Joint conditional generalized characteristic function
/// E[exp(i <zeta, Y(T)>) | state] for tau = T - t.
Complex joint_cf(const Model42& m, const MarketState& state, double tau,
                 std::span<const Complex> zeta, const NumericPolicy& policy = default_policy());

/// Product of the per-factor transform blocks only: joint_cf without the
/// exp(sum_i i zeta_i (Y_i + h_i tau)) prefactor. Rate- and level-free, which
/// is what discount-ratio formulas want.
Complex factor_product(const Model42& m, std::span<const double> V, double tau,
                       std::span<const Complex> zeta,
                       const NumericPolicy& policy = default_policy());

/// Discounted characteristic function of log S^{i,j}:
/// phi(z) = D^i(t) E[ e^{i z x(T)} / D^i(T) ], realized as D^i(t) Psi(zeta)
/// with zeta_i = z + i, zeta_j = -z, all other entries zero.
Complex discounted_cf(const Model42& m, int i, int j, const MarketState& state, double tau,
                      Complex z, const NumericPolicy& policy = default_policy());

/// True iff both zero coupon bonds P^i(t,T) and P^j(t,T) are finite, which
/// licenses any Fourier contour alpha in (-1,0).
bool bond_moment_criterion(const Model42& m, int i, int j, const MarketState& state, double tau,
                           double alpha);

namespace detail {
/// joint_cf without model validation or strip checking, for hot loops that
/// have already vetted the contour (the strip verdict depends only on
/// Im(zeta), which is constant along a Fourier contour).
Complex joint_cf_nocheck(const Model42& m, const MarketState& state, double tau,
                         std::span<const Complex> zeta, const NumericPolicy& policy);
}  // namespace detail

}  // namespace fx42::charfn
