#pragma once

// Independent reference implementations used only by the test suite. These
// deliberately avoid the code paths they are checking: the CIR transforms
// here go through the classical Riccati closed forms, the incomplete gamma
// through its own continued fraction, and the Heston characteristic function
// through the exponential-affine ODE solution.

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "fx42/model.hpp"

namespace oracles {

using Complex = std::complex<double>;
using fx42::model::MarketState;
using fx42::model::Model42;

// E[exp(-lambda X_tau)] for dX = kappa(theta - X)dt + sigma sqrt(X) dW.
double cir_laplace(double kappa, double theta, double sigma, double x0, double lambda,
                   double tau);

// E[exp(-mu int_0^tau X_s ds)].
double cir_bond(double kappa, double theta, double sigma, double x0, double mu, double tau);

// Regularized upper incomplete gamma Q(a,x) by a modified Lentz continued
// fraction (valid for x > 0).
double upper_inc_gamma_cf(double a, double x);

// Regularized lower incomplete gamma by the direct series
// gamma(a,x) = x^a e^{-x} sum_n x^n / (a (a+1) ... (a+n)).
double lower_inc_gamma_series(double a, double x);

// log Gamma(a) for small a > 0 via the Taylor series of log Gamma(1+a)
// (Euler-Mascheroni and zeta constants) and the recurrence Gamma(a) =
// Gamma(1+a)/a.
double ln_gamma_small(double a);

// Joint characteristic function E[exp(i <zeta, Y(T)>)] for a model with all
// b projections zero, via the exponential-affine Riccati solution.
Complex heston_joint_cf(const Model42& m, const MarketState& state, double tau,
                        std::span<const Complex> zeta);

// Risk-neutral European call on one unit of currency i in units of currency
// j for a model with all b projections zero, priced under the putative
// measure Q^j by Gil-Pelaez inversion of the Riccati characteristic function.
double heston_rn_call(const Model42& m, int i, int j, const MarketState& state, double tau,
                      double K);

// Central finite difference.
double central_diff(const std::function<double(double)>& f, double x, double h);

// One-sided Mann-Whitney z statistic for H1: sample a stochastically larger
// than sample b (normal approximation).
double mann_whitney_z(std::span<const double> a, std::span<const double> b);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_se(std::span<const double> xs);

}  // namespace oracles
