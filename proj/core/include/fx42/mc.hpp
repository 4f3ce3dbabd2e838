#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fx42/model.hpp"

namespace fx42::mc {

using model::MarketState;
using model::Model42;
using cir::CirFactor;

enum class Scheme {
    FullTruncationEuler,  // positivity floor on every coefficient evaluation
    ExactTransition,      // noncentral chi-square increments
};

struct McConfig {
    double dt = 1.0 / 512.0;
    double horizon = 1.0;
    int n_paths = 100000;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::FullTruncationEuler;
    bool antithetic = false;
    // Values are recorded every store_dt years (0 keeps only t=0 and the
    // horizon); simulation always advances with the fine dt.
    double store_dt = 0.0;
    int n_threads = 0;  // 0 = hardware concurrency; results do not depend on it
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
};

McEstimate estimate(std::span<const double> samples);

/// Variance-factor paths on the stored grid.
struct CirPaths {
    std::vector<double> times;
    int n_paths = 0;
    std::vector<double> values;  // [p * times.size() + t]
    long floor_hits = 0;

    double at(int p, int t) const { return values[static_cast<size_t>(p) * times.size() + t]; }
};

CirPaths simulate_cir(const CirFactor& f, const McConfig& cfg);

/// Exact draw of V(t) | V(0) in one noncentral chi-square transition. No time
/// discretization enters, so the output is invariant to any dt choice.
std::vector<double> sample_cir_terminal(const CirFactor& f, double t, int n_paths,
                                        std::uint64_t seed);

/// Joint paths of the factors, the log-GOP denominations, the benchmarked
/// savings accounts and their running quadratic variation.
struct PathBundle {
    std::vector<double> times;
    int n_paths = 0;
    int d = 0;
    int N = 0;
    std::uint64_t seed = 0;
    double dt_sim = 0.0;
    long floor_hits = 0;
    std::vector<double> V;     // [p][t][k]
    std::vector<double> Y;     // [p][t][i]
    std::vector<double> Bhat;  // [p][t][i]
    std::vector<double> QV;    // [p][t][i]

    int n_times() const { return static_cast<int>(times.size()); }
    double v(int p, int t, int k) const {
        return V[(static_cast<size_t>(p) * times.size() + t) * d + k];
    }
    double y(int p, int t, int i) const {
        return Y[(static_cast<size_t>(p) * times.size() + t) * N + i];
    }
    double bhat(int p, int t, int i) const {
        return Bhat[(static_cast<size_t>(p) * times.size() + t) * N + i];
    }
    double qv(int p, int t, int i) const {
        return QV[(static_cast<size_t>(p) * times.size() + t) * N + i];
    }
};

PathBundle simulate_market(const Model42& m, const MarketState& state, const McConfig& cfg);

/// Benchmarked savings account of one currency plus its quadratic variation,
/// extracted from a full market simulation.
struct AccountPaths {
    std::vector<double> times;
    int n_paths = 0;
    std::vector<double> bhat;  // [p * times.size() + t]
    std::vector<double> qv;

    double bhat_at(int p, int t) const { return bhat[static_cast<size_t>(p) * times.size() + t]; }
    double qv_at(int p, int t) const { return qv[static_cast<size_t>(p) * times.size() + t]; }
};

AccountPaths simulate_benchmarked_account(const Model42& m, int i, const McConfig& cfg);

/// Mean and standard error of terminal values minus the initial value.
McEstimate martingale_defect(std::span<const double> terminal_values, double initial_value);

struct PayoffSpec {
    enum class Kind { Unit, Spot, Call, Put };
    Kind kind = Kind::Unit;
    int i = 0;       // foreign currency of the exchange rate (Spot/Call/Put)
    int j = 1;       // domestic currency
    double strike = 0.0;
};

/// Real-world pricing estimate: D^i(t) * mean(payoff / D^i(T)). The payoff is
/// expressed in units of currency `denom`.
McEstimate mc_price(const Model42& m, int denom, const PayoffSpec& payoff,
                    const MarketState& state, double tau, const McConfig& cfg);

}  // namespace fx42::mc
