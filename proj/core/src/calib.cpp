#include "fx42/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fx42/errors.hpp"
#include "fx42/optim.hpp"

namespace fx42::calib {

using nlohmann::json;

const PairEnv* MarketEnv::find(const std::string& label) const {
    for (const auto& p : pairs) {
        if (p.label == label) return &p;
    }
    return nullptr;
}

// ---- file formats -----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

[[noreturn]] void surface_error(int row, const std::string& what) {
    throw ValidationError("surface csv row " + std::to_string(row) + ": " + what);
}

}  // namespace

std::vector<VolQuote> parse_surface(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::vector<VolQuote> out;
    int row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            if (t != "pair,tau_years,delta,call_put,vol") {
                surface_error(row, "expected header 'pair,tau_years,delta,call_put,vol'");
            }
            saw_header = true;
            continue;
        }
        const auto f = split_csv_line(t);
        if (f.size() != 5) surface_error(row, "expected 5 fields");
        VolQuote q;
        q.pair = f[0];
        if (q.pair.empty()) surface_error(row, "empty pair label");
        try {
            q.tau = std::stod(f[1]);
        } catch (...) {
            surface_error(row, "cannot parse tau_years '" + f[1] + "'");
        }
        if (!(q.tau > 0.0)) surface_error(row, "tau_years must be > 0");
        try {
            q.moneyness = pricing::DeltaSpec::parse(f[2]);
        } catch (const ValidationError& e) {
            surface_error(row, e.what());
        }
        const std::string cp = f[3];
        if (cp == "C" || cp == "c") {
            q.is_call = true;
        } else if (cp == "P" || cp == "p") {
            q.is_call = false;
        } else {
            surface_error(row, "call_put must be C or P");
        }
        try {
            q.vol = std::stod(f[4]);
        } catch (...) {
            surface_error(row, "cannot parse vol '" + f[4] + "'");
        }
        if (!(q.vol > 0.0 && q.vol < 3.0)) surface_error(row, "vol must lie in (0,3)");
        out.push_back(q);
    }
    return out;
}

std::vector<VolQuote> load_surface(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("surface csv: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto quotes = parse_surface(ss.str());
    if (quotes.empty()) {
        std::fprintf(stderr, "warning: surface file %s contains no quotes\n",
                     path.string().c_str());
    }
    return quotes;
}

std::string surface_to_csv(const std::vector<VolQuote>& quotes) {
    std::ostringstream out;
    out << "pair,tau_years,delta,call_put,vol\n";
    out << std::setprecision(17);
    for (const auto& q : quotes) {
        out << q.pair << ',' << q.tau << ',' << q.moneyness.str() << ','
            << (q.is_call ? 'C' : 'P') << ',' << q.vol << '\n';
    }
    return out.str();
}

MarketEnv parse_env(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("env file: JSON parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("pairs") || !j.at("pairs").is_array()) {
        throw ValidationError("env file: expected top-level object with 'pairs' array");
    }
    MarketEnv env;
    int idx = 0;
    for (const auto& jp : j.at("pairs")) {
        const std::string where = "pairs[" + std::to_string(idx++) + "]";
        for (const char* key : {"label", "spot", "r_dom", "r_for"}) {
            if (!jp.contains(key)) {
                throw ValidationError("env file: missing '" + std::string(key) + "' in " + where);
            }
        }
        PairEnv p;
        p.label = jp.at("label").get<std::string>();
        p.spot = jp.at("spot").get<double>();
        p.r_dom = jp.at("r_dom").get<double>();
        p.r_for = jp.at("r_for").get<double>();
        if (!(p.spot > 0.0)) throw ValidationError("env file: spot must be > 0 in " + where);
        env.pairs.push_back(p);
    }
    return env;
}

MarketEnv load_env(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("env file: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_env(ss.str());
}

PairRef resolve_pair(const Model42& m, const std::string& pair_label) {
    for (int f = 0; f < m.N(); ++f) {
        const auto& base = m.currencies[f].label;
        if (pair_label.size() <= base.size() ||
            pair_label.compare(0, base.size(), base) != 0) {
            continue;
        }
        const std::string rest = pair_label.substr(base.size());
        const int d = m.currency_index(rest);
        if (d >= 0 && d != f) return {d, f};  // quote currency is domestic
    }
    throw ValidationError("pair '" + pair_label + "' does not resolve to two model currencies");
}

MarketState state_from_env(const Model42& m, const MarketEnv& env) {
    MarketState st = model::default_state(m);
    std::vector<bool> known(m.N(), false);
    known[0] = true;
    st.Y[0] = 0.0;
    // Propagate log spots through the pair graph until stable.
    for (int sweep = 0; sweep < m.N() + 1; ++sweep) {
        bool changed = false;
        for (const auto& p : env.pairs) {
            const PairRef r = resolve_pair(m, p.label);
            const double lx = std::log(p.spot);  // Y_dom - Y_for
            if (known[r.dom] && !known[r.fgn]) {
                st.Y[r.fgn] = st.Y[r.dom] - lx;
                known[r.fgn] = changed = true;
            } else if (known[r.fgn] && !known[r.dom]) {
                st.Y[r.dom] = st.Y[r.fgn] + lx;
                known[r.dom] = changed = true;
            } else if (known[r.dom] && known[r.fgn]) {
                if (std::abs(st.Y[r.dom] - st.Y[r.fgn] - lx) > 1e-6) {
                    throw ValidationError("env file: spots are triangle-inconsistent for pair " +
                                          p.label);
                }
            }
        }
        if (!changed) break;
    }
    return st;
}

// ---- objective ---------------------------------------------------------------

namespace {

constexpr double kQuotePenalty = 1.0;  // vol^2 units, added per failed quote

struct QuoteGroup {
    PairRef ref;
    const PairEnv* env = nullptr;
    double tau = 0.0;
    std::vector<int> quote_idx;
};

std::vector<QuoteGroup> group_quotes(const Model42& m, const std::vector<VolQuote>& quotes,
                                     const MarketEnv& env) {
    std::map<std::pair<std::string, double>, QuoteGroup> groups;
    for (int qi = 0; qi < static_cast<int>(quotes.size()); ++qi) {
        const auto& q = quotes[qi];
        auto key = std::make_pair(q.pair, q.tau);
        auto it = groups.find(key);
        if (it == groups.end()) {
            QuoteGroup g;
            g.ref = resolve_pair(m, q.pair);
            g.env = env.find(q.pair);
            if (g.env == nullptr) {
                throw ValidationError("objective: no environment entry for pair " + q.pair);
            }
            g.tau = q.tau;
            it = groups.emplace(key, std::move(g)).first;
        }
        it->second.quote_idx.push_back(qi);
    }
    std::vector<QuoteGroup> out;
    out.reserve(groups.size());
    for (auto& [k, g] : groups) out.push_back(std::move(g));
    return out;
}

// Model implied vols for one (pair, expiry) group via the batched pricer.
// Returns NaN for quotes whose pricing or inversion failed.
std::vector<double> group_model_vols(const Model42& m, const MarketState& state,
                                     const QuoteGroup& g, const std::vector<VolQuote>& quotes,
                                     const pricing::FftConfig& fft, const NumericPolicy& policy) {
    const double df_dom = std::exp(-g.env->r_dom * g.tau);
    const double df_for = std::exp(-g.env->r_for * g.tau);
    const double spot = g.env->spot;
    const size_t nq = g.quote_idx.size();
    std::vector<double> strikes(nq);
    std::vector<double> vols(nq, std::numeric_limits<double>::quiet_NaN());
    for (size_t s = 0; s < nq; ++s) {
        const auto& q = quotes[g.quote_idx[s]];
        strikes[s] = q.moneyness.kind == pricing::DeltaSpec::Kind::Strike
                         ? q.moneyness.strike
                         : pricing::strike_from_delta(q.moneyness, q.vol, spot, g.tau, df_dom,
                                                      df_for);
    }
    std::vector<double> prices;
    try {
        prices = pricing::fft_call_prices(m, g.ref.dom, g.ref.fgn, state, g.tau, fft, strikes, policy);
    } catch (const std::exception&) {
        return vols;  // whole group failed
    }
    for (size_t s = 0; s < nq; ++s) {
        try {
            vols[s] = pricing::implied_vol(prices[s], spot, strikes[s], g.tau, df_dom, df_for,
                                           /*is_call=*/true, policy);
        } catch (const std::exception&) {
            // leave NaN
        }
    }
    return vols;
}

}  // namespace

ObjectiveBreakdown objective_breakdown(const Model42& m, const std::vector<VolQuote>& quotes,
                                       const MarketEnv& env, const pricing::FftConfig& fft,
                                       int n_threads, const NumericPolicy& policy) {
    model::require_valid(m);
    const MarketState state = state_from_env(m, env);
    const auto groups = group_quotes(m, quotes, env);

    std::vector<std::vector<double>> group_vols(groups.size());
    int workers = n_threads > 0 ? n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
    if (workers == 1 || groups.size() <= 1) {
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            group_vols[gi] = group_model_vols(m, state, groups[gi], quotes, fft, policy);
        }
    } else {
        std::vector<std::future<std::vector<double>>> futs(groups.size());
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            futs[gi] = std::async(std::launch::async, [&, gi] {
                return group_model_vols(m, state, groups[gi], quotes, fft, policy);
            });
        }
        for (size_t gi = 0; gi < groups.size(); ++gi) group_vols[gi] = futs[gi].get();
    }

    ObjectiveBreakdown out;
    out.residuals.assign(quotes.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        for (size_t s = 0; s < g.quote_idx.size(); ++s) {
            const int qi = g.quote_idx[s];
            const double mv = group_vols[gi][s];
            if (std::isnan(mv)) continue;
            out.residuals[qi] = mv - quotes[qi].vol;
        }
    }
    // Fixed-order reduction over quote indices, independent of worker count.
    for (size_t qi = 0; qi < quotes.size(); ++qi) {
        if (std::isnan(out.residuals[qi])) {
            out.value += kQuotePenalty;
            ++out.failed_quotes;
        } else {
            out.value += out.residuals[qi] * out.residuals[qi];
        }
    }
    return out;
}

double objective(const Model42& m, const std::vector<VolQuote>& quotes, const MarketEnv& env) {
    return objective_breakdown(m, quotes, env).value;
}

// ---- parameter packing -------------------------------------------------------

namespace {

struct Packing {
    const Model42* tmpl;
    long* feller_repairs;

    size_t size() const {
        return 5 * static_cast<size_t>(tmpl->d()) +
               2 * static_cast<size_t>(tmpl->N()) * static_cast<size_t>(tmpl->d());
    }

    std::vector<double> pack(const Model42& m) const {
        std::vector<double> x;
        x.reserve(size());
        for (const auto& f : m.factors) {
            x.push_back(f.kappa);
            x.push_back(f.theta);
            x.push_back(f.sigma);
            x.push_back(f.v0);
            x.push_back(f.rho);
        }
        for (const auto& c : m.currencies) {
            for (double v : c.a) x.push_back(v);
            for (double v : c.b) x.push_back(v);
        }
        return x;
    }

    Model42 unpack(std::span<const double> x) const {
        Model42 m = *tmpl;
        size_t p = 0;
        for (auto& f : m.factors) {
            f.kappa = x[p++];
            f.theta = x[p++];
            f.sigma = x[p++];
            f.v0 = x[p++];
            f.rho = x[p++];
            const double cap = std::sqrt(2.0 * f.kappa * f.theta);
            if (f.sigma > cap) {
                // Project back onto the Feller region: hard constraint.
                f.sigma = cap * (1.0 - 1e-12);
                if (feller_repairs != nullptr) ++(*feller_repairs);
            }
        }
        for (auto& c : m.currencies) {
            for (int k = 0; k < m.d(); ++k) c.a[k] = x[p++];
            for (int k = 0; k < m.d(); ++k) c.b[k] = x[p++];
        }
        return m;
    }

    optim::Bounds bounds() const {
        optim::Bounds b;
        for (int k = 0; k < tmpl->d(); ++k) {
            b.lo.insert(b.lo.end(), {1e-2, 1e-2, 1e-2, 1e-2, -0.999});
            b.hi.insert(b.hi.end(), {10.0, 3.0, 3.0, 5.0, 0.999});
        }
        for (int i = 0; i < tmpl->N(); ++i) {
            for (int k = 0; k < 2 * tmpl->d(); ++k) {
                b.lo.push_back(-2.0);
                b.hi.push_back(2.0);
            }
        }
        return b;
    }
};

}  // namespace

CalibrationReport calibrate(const Model42& init, const std::vector<VolQuote>& quotes,
                            const MarketEnv& env, const OptimizerConfig& cfg) {
    model::require_valid(init);
    if (quotes.empty()) throw ValidationError("calibrate: no quotes");

    long feller_repairs = 0;
    Packing packing{&init, &feller_repairs};
    const optim::Bounds bounds = packing.bounds();
    const std::vector<double> x0 = packing.pack(init);
    {
        std::ostringstream bad;
        for (size_t i = 0; i < x0.size(); ++i) {
            if (x0[i] < bounds.lo[i] || x0[i] > bounds.hi[i]) {
                bad << "parameter " << i << " = " << x0[i] << " outside [" << bounds.lo[i] << ", "
                    << bounds.hi[i] << "]; ";
            }
        }
        if (!bad.str().empty()) {
            throw ValidationError("calibrate: initial guess violates bounds: " + bad.str());
        }
    }

    auto scalar_obj = [&](std::span<const double> x) {
        return objective_breakdown(packing.unpack(x), quotes, env, cfg.fft, cfg.n_threads).value;
    };
    auto residual_fn = [&](std::span<const double> x) {
        const auto bd =
            objective_breakdown(packing.unpack(x), quotes, env, cfg.fft, cfg.n_threads);
        std::vector<double> r = bd.residuals;
        for (double& v : r) {
            if (std::isnan(v)) v = std::sqrt(kQuotePenalty);
        }
        return r;
    };

    CalibrationReport report;

    // Stage 1: seeded scatter of simplex starts around the initial guess.
    std::vector<double> best_x = x0;
    double best_f = scalar_obj(x0);
    ++report.evaluations;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-cfg.scatter_spread, cfg.scatter_spread);
    for (int s = 0; s < cfg.scatter_starts; ++s) {
        std::vector<double> start = x0;
        if (s > 0) {
            for (double& v : start) v *= (1.0 + unif(rng));
            for (size_t p = 0; p < start.size(); ++p) {
                start[p] = std::clamp(start[p], bounds.lo[p], bounds.hi[p]);
            }
        }
        optim::NelderMeadConfig nm;
        nm.max_evals = cfg.nm_max_evals;
        const auto r = optim::nelder_mead(scalar_obj, start, bounds, nm);
        report.evaluations += r.evals;
        if (r.fval < best_f) {
            best_f = r.fval;
            best_x = r.x;
        }
    }

    // Stage 2: damped least squares polish.
    optim::LevenbergMarquardtConfig lm;
    lm.max_iters = cfg.lm_max_iters;
    const auto r = optim::levenberg_marquardt(residual_fn, best_x, bounds, lm);
    report.evaluations += r.evals;
    report.iterations = r.iterations;
    if (r.fval < best_f) {
        best_f = r.fval;
        best_x = r.x;
    }
    report.converged = r.converged;

    report.fitted = packing.unpack(best_x);
    const auto bd = objective_breakdown(report.fitted, quotes, env, cfg.fft, cfg.n_threads);
    report.objective = bd.value;
    report.residual_norm = std::sqrt(bd.value);
    report.residuals = bd.residuals;
    report.failed_quotes = bd.failed_quotes;
    report.feller_repairs = feller_repairs;
    report.regime = model::measure_regime(report.fitted);
    // The search never leaves the feasible region, so the fit cannot be worse
    // than the start; keep the better of the two by construction.
    return report;
}

std::string regime_report(const Model42& m) {
    const auto regime = model::measure_regime(m);
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << std::left << std::setw(10) << "Measure";
    for (int k = 0; k < m.d(); ++k) {
        out << std::right << std::setw(10) << ("V" + std::to_string(k + 1));
    }
    out << "  Risk neutral pricing possible\n";
    out << std::left << std::setw(10) << "P";
    for (int k = 0; k < m.d(); ++k) out << std::right << std::setw(10) << regime.p_gaps[k];
    out << "\n";
    for (int i = 0; i < m.N(); ++i) {
        out << std::left << std::setw(10) << ("Q^" + m.currencies[i].label);
        for (int k = 0; k < m.d(); ++k) out << std::right << std::setw(10) << regime.q_gaps[i][k];
        out << "  "
            << (regime.verdicts[i] == model::RegimeVerdict::RiskNeutralPossible ? "YES" : "NO")
            << "\n";
    }
    return out.str();
}

std::vector<VolQuote> synthetic_surface(const Model42& m, const MarketEnv& env,
                                        const std::vector<double>& taus,
                                        const std::vector<std::string>& moneyness,
                                        const pricing::FftConfig& fft,
                                        const NumericPolicy& policy) {
    model::require_valid(m);
    const MarketState state = state_from_env(m, env);
    std::vector<VolQuote> out;
    for (const auto& pe : env.pairs) {
        const PairRef ref = resolve_pair(m, pe.label);
        for (double tau : taus) {
            const double df_dom = std::exp(-pe.r_dom * tau);
            const double df_for = std::exp(-pe.r_for * tau);
            for (const auto& spec_text : moneyness) {
                const auto spec = pricing::DeltaSpec::parse(spec_text);
                double sigma = 0.2;
                double strike = spec.kind == pricing::DeltaSpec::Kind::Strike ? spec.strike : 0.0;
                for (int it = 0; it < 12; ++it) {
                    if (spec.kind != pricing::DeltaSpec::Kind::Strike) {
                        strike = pricing::strike_from_delta(spec, sigma, pe.spot, tau, df_dom,
                                                            df_for);
                    }
                    const auto price = pricing::fft_call_prices(m, ref.dom, ref.fgn, state, tau, fft,
                                                                {strike}, policy)[0];
                    const double next = pricing::implied_vol(price, pe.spot, strike, tau, df_dom,
                                                             df_for, true, policy);
                    const bool done = std::abs(next - sigma) < 1e-12 ||
                                      spec.kind == pricing::DeltaSpec::Kind::Strike;
                    sigma = next;
                    if (done) break;
                }
                VolQuote q;
                q.pair = pe.label;
                q.tau = tau;
                q.moneyness = spec;
                q.is_call = spec.is_call();
                q.vol = sigma;
                out.push_back(q);
            }
        }
    }
    return out;
}

}  // namespace fx42::calib
