#pragma once

#include <array>
#include <vector>

#include "fx42/mc.hpp"
#include "fx42/model.hpp"
#include "fx42/policy.hpp"

namespace fx42::hedging {

using model::Model42;

/// Diffusion loadings of the benchmarked domestic zero coupon bond
/// d P-hat = x1 dZ1 + x2 dZ2 + x3 dZ2-perp, together with the benchmarked
/// bond value psi itself.
struct HedgeCoeffs {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;
    double psi = 0.0;
};

/// Requires d = 2 and the closed-form bond configuration for the domestic
/// currency: factor 1 must drop out of the transform (its putative drift
/// adjustment keeps the hypergeometric factor trivial) and factor 2 must
/// either reduce to the incomplete-gamma form (measure change broken) or
/// cancel entirely (true-martingale case, bond = discounting, x3 = 0).
HedgeCoeffs bond_diffusion_coeffs(const Model42& m, int domestic, std::array<double, 2> V,
                                  double D_dom, double tau,
                                  const NumericPolicy& policy = default_policy());

/// 3x3 loading matrix of the benchmarked primary accounts: rows are
/// currencies, columns 1..2 the projections a^i_k sqrt(V_k) + b^i_k/sqrt(V_k),
/// column 3 all ones. Requires N = 3, d = 2.
using Matrix3 = std::array<std::array<double, 3>, 3>;
Matrix3 phi_matrix(const Model42& m, std::array<double, 2> V);

/// State carried along a hedge path.
struct HedgeState {
    double t = 0.0;
    std::array<double, 2> V{};
    double D_dom = 1.0;
    std::array<double, 3> bhat{};      // benchmarked primary account values
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
    std::array<double, 3> holdings{};
    double eta_increment = 0.0;  // last monitoring increment
    double eta = 0.0;            // accumulated monitoring value
};

/// Holdings in the three benchmarked primary accounts: solves
/// Phi^T y = (-x1, -x2, psi - eta)^T and divides by the account values, so
/// holdings . bhat + eta = psi holds identically. Throws NumericError with
/// the condition number when Phi is ill conditioned.
std::array<double, 3> strategy_vector(const Model42& m, int domestic, const HedgeState& state,
                                      double tau, const NumericPolicy& policy = default_policy());

struct BacktestResult {
    std::vector<double> terminal_error;  // domestic currency units, per path
    std::vector<double> eta_T;           // benchmarked monitoring value at T, per path
    double mean_error = 0.0;             // of eta_T
    double std_error = 0.0;
    std::array<double, 3> eta_bhat_corr{};  // corr(d eta, d Bhat^j), pooled
    double max_reconstruction_error = 0.0;  // relative
    double initial_cost = 0.0;               // domestic units at t = 0
};

/// Discrete rebalancing of the strategy along simulated paths. The bundle
/// must store exactly the rebalance grid and reach at least T.
BacktestResult backtest(const Model42& m, int domestic, const mc::PathBundle& bundle, double T,
                        const NumericPolicy& policy = default_policy());

}  // namespace fx42::hedging
