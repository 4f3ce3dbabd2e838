#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fx42/model.hpp"
#include "fx42/pricing.hpp"

namespace fx42::calib {

using model::MarketState;
using model::Model42;

/// One FX option quote: pair label like "EURUSD" (price of one EUR in USD),
/// expiry in years, moneyness as a delta spec or absolute strike, and the
/// quoted Black vol.
struct VolQuote {
    std::string pair;
    double tau = 0.0;
    pricing::DeltaSpec moneyness;
    bool is_call = true;
    double vol = 0.0;
};

/// Spot and deposit rates for one pair; r_dom discounts the domestic
/// (second) currency, r_for the foreign (first) one.
struct PairEnv {
    std::string label;
    double spot = 0.0;
    double r_dom = 0.0;
    double r_for = 0.0;
};

struct MarketEnv {
    std::vector<PairEnv> pairs;
    const PairEnv* find(const std::string& label) const;
};

/// Surface CSV: header pair,tau_years,delta,call_put,vol. The delta column
/// accepts 15DP/25DP/ATM/25DC/15DC style specs or K=<number>.
std::vector<VolQuote> load_surface(const std::filesystem::path& path);
std::vector<VolQuote> parse_surface(const std::string& csv_text);
std::string surface_to_csv(const std::vector<VolQuote>& quotes);

/// Environment JSON: {"pairs":[{"label","spot","r_dom","r_for"}]}.
MarketEnv load_env(const std::filesystem::path& path);
MarketEnv parse_env(const std::string& json_text);

/// Splits a pair label like "EURUSD" (EUR is the base/foreign currency, USD
/// the quote/domestic one; the spot is USD per EUR) into model currency
/// indices. Options on the pair are priced and settled in the domestic
/// currency; the engine's exchange rate is exp(Y_dom - Y_for).
struct PairRef {
    int dom = -1;
    int fgn = -1;
};
PairRef resolve_pair(const Model42& m, const std::string& pair_label);

/// Builds the state whose exchange rates match the env spots (first currency
/// anchored at Y = 0). Throws if a pair references unknown currencies or the
/// spots are triangle-inconsistent beyond 1e-6 relative.
MarketState state_from_env(const Model42& m, const MarketEnv& env);

struct ObjectiveBreakdown {
    double value = 0.0;                 // sum of squared vol residuals (+penalties)
    std::vector<double> residuals;      // per quote, NaN where pricing failed
    int failed_quotes = 0;              // quotes that hit the penalty path
};

/// Sum over quotes of (model implied vol - market vol)^2, with model vols
/// produced by the batched Fourier pricer and a Black inversion. Pricing
/// failures add a capped unit penalty instead of aborting the search.
ObjectiveBreakdown objective_breakdown(const Model42& m, const std::vector<VolQuote>& quotes,
                                       const MarketEnv& env,
                                       const pricing::FftConfig& fft = {},
                                       int n_threads = 0,
                                       const NumericPolicy& policy = default_policy());

double objective(const Model42& m, const std::vector<VolQuote>& quotes, const MarketEnv& env);

struct OptimizerConfig {
    int scatter_starts = 4;       // seeded simplex starts around the initial guess
    double scatter_spread = 0.2;  // relative perturbation of the starts
    int nm_max_evals = 250;       // per start
    int lm_max_iters = 40;
    std::uint64_t seed = 0;
    int n_threads = 0;
    pricing::FftConfig fft;
};

struct CalibrationReport {
    Model42 fitted;
    double objective = 0.0;
    double residual_norm = 0.0;  // sqrt(objective)
    std::vector<double> residuals;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    int failed_quotes = 0;
    long feller_repairs = 0;  // trial points projected back onto the Feller region
    model::MeasureRegime regime;
};

/// Two-stage least squares fit of all factor and projection parameters
/// (rates h stay fixed): seeded simplex scatter, then damped least squares.
/// Bit-deterministic for a fixed seed, quote file and thread-count-independent
/// objective.
CalibrationReport calibrate(const Model42& init, const std::vector<VolQuote>& quotes,
                            const MarketEnv& env, const OptimizerConfig& cfg);

/// Human-readable Feller regime table (one row per measure).
std::string regime_report(const Model42& m);

/// Forward-generates a surface from the model itself: for each pair in env,
/// each expiry and each moneyness spec, solves the delta-strike fixed point
/// and records the model implied vol.
std::vector<VolQuote> synthetic_surface(const Model42& m, const MarketEnv& env,
                                        const std::vector<double>& taus,
                                        const std::vector<std::string>& moneyness,
                                        const pricing::FftConfig& fft = {},
                                        const NumericPolicy& policy = default_policy());

}  // namespace fx42::calib
