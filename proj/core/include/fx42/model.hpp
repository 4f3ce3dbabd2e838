#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fx42/cir.hpp"

namespace fx42::model {

using cir::CirFactor;

/// Per-currency projection block. h is the constant short-rate part; H and G
/// load the rate on V and 1/V; a and b project the market price of risk on
/// sqrt(V) and 1/sqrt(V). All vectors have length d.
struct CurrencyBlock {
    std::string label;
    double h = 0.0;
    std::vector<double> H, G, a, b;
};

/// N currencies driven by d square-root variance factors.
struct Model42 {
    std::vector<CirFactor> factors;
    std::vector<CurrencyBlock> currencies;

    int d() const { return static_cast<int>(factors.size()); }
    int N() const { return static_cast<int>(currencies.size()); }
    int currency_index(const std::string& label) const;  // -1 if absent
};

/// Initial market state: log-GOP levels per currency and variance levels per
/// factor. Defaults normalize every GOP denomination to 1.
struct MarketState {
    std::vector<double> Y;
    std::vector<double> V;
};

MarketState default_state(const Model42& m);

/// Empty iff the model satisfies every structural invariant (shapes,
/// admissibility, Feller condition under the real-world measure).
std::vector<std::string> validate(const Model42& m);

/// Throws ValidationError listing all violations.
void require_valid(const Model42& m);

/// 2 kappa_k theta_k - sigma_k^2 - 2 rho_k sigma_k b^i_k: the Feller gap of
/// factor k under the putative risk neutral measure of currency i.
double putative_feller_gap(const Model42& m, int i, int k);

enum class RegimeVerdict { RiskNeutralPossible, StrictLocalMartingale };

/// Feller diagnostics under the real-world measure and under every putative
/// risk neutral measure.
struct MeasureRegime {
    std::vector<double> p_gaps;                // [k]
    std::vector<std::vector<double>> q_gaps;   // [i][k]
    std::vector<RegimeVerdict> verdicts;       // [i]
};

MeasureRegime measure_regime(const Model42& m);

/// pi^i_k = a^i_k sqrt(V_k) + b^i_k / sqrt(V_k). Requires V > 0.
std::vector<double> market_price_of_risk(const Model42& m, int i, std::span<const double> V);

/// r^i = h^i + <H^i, V> + <G^i, 1/V>. Requires V > 0.
double short_rate(const Model42& m, int i, std::span<const double> V);

/// Market-price-of-risk shapes for the two-currency embedding of a Heston
/// exchange rate: lambda = a sqrt(V), b / sqrt(V), or the sum of both.
enum class HestonEmbedCase { AsqrtV, BoverSqrtV, Mixed };

/// Builds the two-currency, one-factor model in which the exchange rate
/// S^{1,2} has Heston dynamics and the domestic market price of risk is the
/// selected lambda shape: a^1 = a, b^1 = b, a^2 = a - 1, b^2 = b.
Model42 heston_embed(HestonEmbedCase c, double a, double b, const CirFactor& heston,
                     std::pair<double, double> rates);

/// JSON model file: top-level keys d, N, factors[], currencies[]; exact field
/// names, unknown fields rejected, validated on load.
Model42 load_model(const std::filesystem::path& path);
Model42 parse_model(const std::string& json_text);
std::string model_to_json(const Model42& m);
void save_model(const Model42& m, const std::filesystem::path& path);

}  // namespace fx42::model
