#pragma once

#include <complex>
#include <string>

#include "fx42/policy.hpp"

namespace fx42::cir {

using Complex = std::complex<double>;

/// One square-root variance factor dV = kappa(theta - V)dt + sigma sqrt(V) dW
/// with initial level v0 and asset-factor correlation rho.
struct CirFactor {
    double kappa = 0.0;  // mean reversion rate, 1/years
    double theta = 0.0;  // long-run level
    double sigma = 0.0;  // vol of vol
    double v0 = 0.0;     // initial level
    double rho = 0.0;    // correlation with the asset shock, in [-1, 1]
};

/// Throws ValidationError if the factor is not admissible
/// (positivity of kappa, theta, sigma, v0 and |rho| <= 1).
void validate(const CirFactor& f);

/// 2*kappa*theta - sigma^2. Nonnegative iff the factor never reaches zero.
double feller_gap(const CirFactor& f);

/// Exponents of the transform E[ X_tau^-alpha exp(-lambda X_tau
/// - mu int_0^tau X dt - nu int_0^tau dt/X) ].
struct TransformArgs {
    Complex alpha{0.0, 0.0};
    Complex lambda{0.0, 0.0};
    Complex mu{0.0, 0.0};
    Complex nu{0.0, 0.0};
    double tau = 0.0;  // time to maturity, years
};

enum class DomainStatus { ValidAllT, ValidUntil, Invalid };

struct DomainVerdict {
    DomainStatus status = DomainStatus::ValidAllT;
    double t_star = 0.0;     // meaningful for ValidUntil
    std::string reason;      // meaningful for Invalid
};

/// Checks the validity conditions for the transform. For complex arguments
/// the conditions are applied to the real parts, which dominate the modulus
/// of the integrand. When only the lambda condition fails the transform
/// still exists up to a finite explosion time t*.
DomainVerdict transform_domain(const CirFactor& f, const TransformArgs& args);

/// Closed form for the transform above. Requires transform_domain to allow
/// args.tau; throws std::domain_error otherwise. Propagates NumericError
/// from the special function layer.
Complex general_transform(const CirFactor& f, const TransformArgs& args,
                          const NumericPolicy& policy = default_policy());

}  // namespace fx42::cir
