#pragma once

#include <string>
#include <vector>

#include "fx42/charfn.hpp"
#include "fx42/model.hpp"
#include "fx42/policy.hpp"

namespace fx42::pricing {

using model::MarketState;
using model::Model42;

/// Fourier grid of the batch pricer: n_points frequencies spaced eta apart,
/// Simpson weights, prices read off at log-strikes. The contour alpha lies in
/// (-1,0) unless the caller knows the strip supports more.
struct FftConfig {
    int n_points = 4096;
    double eta = 0.1;
    double alpha = -0.5;
    enum class Interp { Exact, Linear };
    // Exact evaluates the same Simpson-weighted sum directly at each
    // requested log-strike; Linear interpolates the FFT grid values.
    Interp interp = Interp::Exact;
};

// ---- Black utilities ------------------------------------------------------

/// Garman-Kohlhagen price with explicit domestic/foreign discount factors.
double black_price(double spot, double K, double tau, double sigma, double df_dom,
                   double df_for, bool is_call);

/// Black vega (same conventions), used by the implied vol solver.
double black_vega(double spot, double K, double tau, double sigma, double df_dom,
                  double df_for);

/// Implied Black vol. Throws std::domain_error when the price violates the
/// no-arbitrage bounds for the given forward and discount factors.
double implied_vol(double price, double spot, double K, double tau, double df_dom,
                   double df_for, bool is_call = true,
                   const NumericPolicy& policy = default_policy());

/// Moneyness spec of an FX quote: either a Black delta (unadjusted spot
/// delta), the delta-neutral straddle, or an absolute strike.
struct DeltaSpec {
    enum class Kind { DeltaCall, DeltaPut, Atm, Strike };
    Kind kind = Kind::Atm;
    double delta = 0.0;   // e.g. 0.25 for a 25-delta quote
    double strike = 0.0;  // for Kind::Strike

    static DeltaSpec parse(const std::string& text);  // "25DP", "ATM", "K=1.25"
    std::string str() const;
    bool is_call() const { return kind != Kind::DeltaPut; }
};

/// Strike for a delta quote under the unadjusted spot-delta convention:
/// calls solve Phi(d1) = delta, puts solve Phi(-d1) = delta, ATM is the
/// delta-neutral straddle K = F exp(sigma^2 tau / 2).
double strike_from_delta(const DeltaSpec& spec, double sigma, double spot, double tau,
                         double df_dom, double df_for);

// ---- Model pricers --------------------------------------------------------

/// European call on one unit of currency i, paid in currency j, by the
/// shifted-contour Fourier representation with adaptive Gauss-Kronrod
/// quadrature. alpha is the contour; the residue term follows the contour.
double lee_call_price(const Model42& m, int i, int j, const MarketState& state, double tau,
                      double K, double alpha, const NumericPolicy& policy = default_policy());

/// Same price by the batched Fourier grid (one pass of CF evaluations per
/// expiry, all strikes read from it).
std::vector<double> fft_call_prices(const Model42& m, int i, int j, const MarketState& state,
                                    double tau, const FftConfig& cfg,
                                    const std::vector<double>& strikes,
                                    const NumericPolicy& policy = default_policy());

/// Put via parity from the call and the two fair legs.
double lee_put_price(const Model42& m, int i, int j, const MarketState& state, double tau,
                     double K, double alpha, const NumericPolicy& policy = default_policy());

// ---- Zero coupon bonds ----------------------------------------------------

/// Real-world (minimal) ZCB price P^i(t,T) = discounted_cf at z = 0.
double zcb_real_world(const Model42& m, int i, const MarketState& state, double tau,
                      const NumericPolicy& policy = default_policy());

/// Quotient of the real-world price over exp(-h^i tau). Independent of the
/// rate and GOP level by construction; equals 1 whenever the benchmarked
/// savings account of currency i is a true martingale (and H = G = 0).
double zcb_ba_rn_ratio(const Model42& m, int i, const MarketState& state, double tau,
                       const NumericPolicy& policy = default_policy());

/// Two-factor closed form for the domestic ZCB in the configuration where
/// factor 1 drops out of the transform and factor 2 reduces the
/// hypergeometric factor to an incomplete gamma ratio:
///   P = exp(-h^i tau) * P(m2, V2 * (2 sqrt(A2)/sigma2^2) / (e^{sqrt(A2) tau} - 1)).
/// Throws ValidationError naming the identity that fails when the model is
/// not in that configuration.
double zcb_closed_form_42(const Model42& m, int i, double V2, double tau,
                          const NumericPolicy& policy = default_policy());

/// The incomplete-gamma quotient of the closed form alone (price / e^{-h tau}).
double zcb_closed_form_ratio(const Model42& m, int i, double V2, double tau,
                             const NumericPolicy& policy = default_policy());

/// exp(-r tau): the formal risk-neutral price under a constant rate.
double zcb_formal_risk_neutral(double r, double tau);

}  // namespace fx42::pricing
