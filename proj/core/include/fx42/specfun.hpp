#pragma once

#include <complex>

#include "fx42/policy.hpp"

namespace fx42::specfun {

using Complex = std::complex<double>;

/// Principal-branch log of the Gamma function on the right half plane.
/// Throws std::domain_error for Re(z) <= 0 (no reflection is performed;
/// nothing in this library needs the left half plane).
Complex ln_gamma(Complex z);

/// Real convenience overload, x > 0.
double ln_gamma(double x);

/// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a),
/// a > 0, x >= 0. Series for x < a+1, continued fraction otherwise.
double reg_lower_inc_gamma(double a, double x, const NumericPolicy& policy = default_policy());

/// Kummer's confluent hypergeometric function M(a,b,z) with value*exp(log_scale)
/// representation so large positive Re(z) does not overflow.
struct ScaledComplex {
    Complex value;
    double log_scale = 0.0;
};

ScaledComplex hyp1f1_scaled(Complex a, Complex b, Complex z,
                            const NumericPolicy& policy = default_policy());

/// M(a,b,z) as a plain complex number; throws NumericError if the result
/// cannot be represented in a double.
Complex hyp1f1(Complex a, Complex b, Complex z,
               const NumericPolicy& policy = default_policy());

/// log M(a,b,z), principal value of the log of the scaled evaluation.
Complex ln_hyp1f1(Complex a, Complex b, Complex z,
                  const NumericPolicy& policy = default_policy());

// Standard normal cdf / inverse cdf, used by the Black formula utilities.
double norm_cdf(double x);
double norm_inv_cdf(double p);

}  // namespace fx42::specfun
