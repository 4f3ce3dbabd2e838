#include "fx42/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fx42/calib.hpp"
#include "fx42/errors.hpp"
#include "fx42/hedging.hpp"
#include "fx42/mc.hpp"
#include "fx42/model.hpp"
#include "fx42/pricing.hpp"

namespace fx42::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct RateCurve {
    std::vector<double> taus;
    std::vector<double> dfs;

    double df(double tau) const {
        if (taus.empty()) throw ValidationError("rates file: empty curve");
        for (size_t q = 0; q < taus.size(); ++q) {
            if (std::abs(taus[q] - tau) < 1e-9) return dfs[q];
        }
        // log-linear interpolation in tau, flat extrapolation in zero rate
        if (tau <= taus.front()) {
            return std::exp(std::log(dfs.front()) * tau / taus.front());
        }
        if (tau >= taus.back()) {
            return std::exp(std::log(dfs.back()) * tau / taus.back());
        }
        size_t hi = 1;
        while (taus[hi] < tau) ++hi;
        const double w = (tau - taus[hi - 1]) / (taus[hi] - taus[hi - 1]);
        return std::exp((1.0 - w) * std::log(dfs[hi - 1]) + w * std::log(dfs[hi]));
    }
};

RateCurve load_rates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("rates file: cannot open " + path);
    RateCurve out;
    std::string line;
    int row = 0;
    int mode = 0;  // 1 = rate column, 2 = df column
    while (std::getline(in, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (mode == 0) {
            if (t == "tau_years,rate") {
                mode = 1;
            } else if (t == "tau_years,df") {
                mode = 2;
            } else {
                throw ValidationError("rates file row " + std::to_string(row) +
                                      ": expected header 'tau_years,rate' or 'tau_years,df'");
            }
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("rates file row " + std::to_string(row) + ": expected 2 fields");
        }
        try {
            const double tau = std::stod(trim(t.substr(0, comma)));
            const double val = std::stod(trim(t.substr(comma + 1)));
            if (!(tau > 0.0)) throw std::invalid_argument("tau");
            out.taus.push_back(tau);
            out.dfs.push_back(mode == 1 ? std::exp(-val * tau) : val);
            if (!(out.dfs.back() > 0.0)) throw std::invalid_argument("df");
        } catch (const ValidationError&) {
            throw;
        } catch (...) {
            throw ValidationError("rates file row " + std::to_string(row) + ": cannot parse");
        }
    }
    if (out.taus.empty()) throw ValidationError("rates file: no rows");
    for (size_t q = 1; q < out.taus.size(); ++q) {
        if (out.taus[q] <= out.taus[q - 1]) {
            throw ValidationError("rates file: maturities must be strictly increasing");
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        try {
            out.push_back(std::stod(t));
        } catch (...) {
            throw ValidationError("cannot parse numeric list entry '" + t + "'");
        }
    }
    if (out.empty()) throw ValidationError("empty numeric list");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << text;
}

// Every run with --out leaves a JSON sidecar with the full configuration, so
// any artifact can be traced back to its inputs.
void write_sidecar(const std::string& out_path, const json& config) {
    if (out_path.empty()) return;
    write_text(out_path + ".run.json", config.dump(2) + "\n");
}

void emit(const std::string& out_path, const std::string& text, const json& config) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
        write_sidecar(out_path, config);
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int currency_or_throw(const model::Model42& m, const std::string& label) {
    const int i = m.currency_index(label);
    if (i < 0) throw ValidationError("currency '" + label + "' not in model");
    return i;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"fx42: multi-currency 4/2 stochastic volatility FX engine"};
    app.require_subcommand(1);

    std::string model_path, surface_path, env_path, rates_path, out_path;
    std::string currency, maturities_text;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double alpha = -0.5, fft_eta = 0.1, dt = 1.0 / 512.0, horizon = 10.0;
    double store_dt = 0.0, rebalance_dt = 1.0 / 52.0;
    int fft_n = 4096, paths = 100000;
    int scatter = 4, nm_evals = 250, lm_iters = 40;
    std::string scheme_name = "euler";
    bool dry_run = false;

    auto add_common = [&](CLI::App* cmd, bool needs_model = true) {
        if (needs_model) cmd->add_option("--model", model_path, "model JSON file")->required();
        cmd->add_option("--out", out_path, "output file (stdout when omitted)");
        cmd->add_flag("--dry-run", dry_run, "validate inputs and schemas only");
    };

    auto* feller = app.add_subcommand("feller", "Feller regime table under P and Q^i");
    add_common(feller);

    auto* zcb = app.add_subcommand("price-zcb", "zero coupon bonds: formal risk-neutral vs real-world");
    add_common(zcb);
    zcb->add_option("--currency", currency, "currency label")->required();
    zcb->add_option("--rates", rates_path, "rates CSV (tau_years,rate or tau_years,df)")->required();
    zcb->add_option("--maturities", maturities_text, "comma list of maturities in years")->required();

    auto* opts = app.add_subcommand("price-options", "price the instruments of a surface file");
    add_common(opts);
    opts->add_option("--surface", surface_path, "surface CSV")->required();
    opts->add_option("--env", env_path, "environment JSON")->required();
    opts->add_option("--alpha", alpha, "Fourier contour in (-1,0)");
    opts->add_option("--fft-n", fft_n, "Fourier grid points (power of two)");
    opts->add_option("--fft-eta", fft_eta, "Fourier grid spacing");

    auto* cal = app.add_subcommand("calibrate", "least squares fit to a vol surface");
    add_common(cal);
    cal->add_option("--surface", surface_path, "surface CSV")->required();
    cal->add_option("--env", env_path, "environment JSON")->required();
    cal->add_option("--seed", seed, "random seed (required)")->required()->each([&](const std::string&) {
        seed_set = true;
    });
    cal->add_option("--alpha", alpha, "Fourier contour in (-1,0)");
    cal->add_option("--fft-n", fft_n, "Fourier grid points");
    cal->add_option("--fft-eta", fft_eta, "Fourier grid spacing");
    cal->add_option("--scatter", scatter, "simplex scatter starts");
    cal->add_option("--nm-evals", nm_evals, "simplex evaluation budget per start");
    cal->add_option("--lm-iters", lm_iters, "damped least squares iterations");

    auto* sim = app.add_subcommand("simulate", "simulate factor and benchmarked account paths");
    add_common(sim);
    sim->add_option("--currency", currency, "currency label")->required();
    sim->add_option("--seed", seed, "random seed (required)")->required()->each([&](const std::string&) {
        seed_set = true;
    });
    sim->add_option("--paths", paths, "number of paths");
    sim->add_option("--dt", dt, "simulation step in years");
    sim->add_option("--horizon", horizon, "horizon in years");
    sim->add_option("--store-dt", store_dt, "recording interval (0 = endpoints only)");
    sim->add_option("--scheme", scheme_name, "euler | exact");

    auto* hedge = app.add_subcommand("hedge-backtest", "benchmarked risk minimizing hedge of the domestic ZCB");
    add_common(hedge);
    hedge->add_option("--currency", currency, "domestic currency label")->required();
    hedge->add_option("--seed", seed, "random seed (required)")->required()->each([&](const std::string&) {
        seed_set = true;
    });
    hedge->add_option("--paths", paths, "number of paths");
    hedge->add_option("--dt", dt, "simulation step in years");
    hedge->add_option("--horizon", horizon, "bond maturity T in years");
    hedge->add_option("--rebalance-dt", rebalance_dt, "rebalancing interval in years");

    std::vector<std::string> argv(args);
    try {
        std::vector<const char*> cargs;
        cargs.push_back("fx42");
        for (const auto& a : argv) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    json config;
    config["model"] = model_path;
    if (!out_path.empty()) config["out"] = out_path;

    try {
        if (app.got_subcommand(feller)) {
            const auto m = model::load_model(model_path);
            if (dry_run) {
                std::cout << "ok: model valid\n";
                return 0;
            }
            config["command"] = "feller";
            const auto regime = model::measure_regime(m);
            std::ostringstream csv;
            csv << "measure";
            for (int k = 0; k < m.d(); ++k) csv << ",gap_factor" << (k + 1);
            csv << ",risk_neutral_pricing_possible\n";
            csv << "P";
            for (int k = 0; k < m.d(); ++k) csv << ',' << fmt(regime.p_gaps[k]);
            csv << ",\n";
            for (int i = 0; i < m.N(); ++i) {
                csv << "Q^" << m.currencies[i].label;
                for (int k = 0; k < m.d(); ++k) csv << ',' << fmt(regime.q_gaps[i][k]);
                csv << ','
                    << (regime.verdicts[i] == model::RegimeVerdict::RiskNeutralPossible ? "YES"
                                                                                        : "NO")
                    << '\n';
            }
            emit(out_path, csv.str(), config);
            if (!out_path.empty()) std::cout << calib::regime_report(m);
            return 0;
        }

        if (app.got_subcommand(zcb)) {
            const auto m = model::load_model(model_path);
            const int ci = currency_or_throw(m, currency);
            const auto curve = load_rates(rates_path);
            const auto taus = parse_list(maturities_text);
            if (dry_run) {
                std::cout << "ok: model, rates and maturities valid\n";
                return 0;
            }
            config["command"] = "price-zcb";
            config["currency"] = currency;
            config["rates"] = rates_path;
            config["maturities"] = taus;
            const auto state = model::default_state(m);
            std::ostringstream csv;
            csv << "tau_years,risk_neutral,benchmark,difference\n";
            for (double tau : taus) {
                const double rn = curve.df(tau);
                const double ratio = pricing::zcb_ba_rn_ratio(m, ci, state, tau);
                const double ba = rn * ratio;
                csv << fmt(tau) << ',' << fmt(rn) << ',' << fmt(ba) << ',' << fmt(rn - ba) << '\n';
            }
            emit(out_path, csv.str(), config);
            return 0;
        }

        if (app.got_subcommand(opts)) {
            const auto m = model::load_model(model_path);
            const auto env = calib::load_env(env_path);
            const auto quotes = calib::load_surface(surface_path);
            if (dry_run) {
                std::cout << "ok: model, env and surface valid (" << quotes.size()
                          << " quotes)\n";
                return 0;
            }
            config["command"] = "price-options";
            config["surface"] = surface_path;
            config["env"] = env_path;
            config["alpha"] = alpha;
            config["fft_n"] = fft_n;
            config["fft_eta"] = fft_eta;
            pricing::FftConfig fft;
            fft.alpha = alpha;
            fft.n_points = fft_n;
            fft.eta = fft_eta;
            const auto state = calib::state_from_env(m, env);
            std::ostringstream csv;
            csv << "pair,tau,strike,delta,call_put,price,implied_vol\n";
            for (const auto& q : quotes) {
                const auto ref = calib::resolve_pair(m, q.pair);
                const auto* pe = env.find(q.pair);
                if (pe == nullptr) {
                    throw ValidationError("no environment entry for pair " + q.pair);
                }
                const double df_dom = std::exp(-pe->r_dom * q.tau);
                const double df_for = std::exp(-pe->r_for * q.tau);
                const double K =
                    q.moneyness.kind == pricing::DeltaSpec::Kind::Strike
                        ? q.moneyness.strike
                        : pricing::strike_from_delta(q.moneyness, q.vol, pe->spot, q.tau, df_dom,
                                                     df_for);
                const double call =
                    pricing::fft_call_prices(m, ref.dom, ref.fgn, state, q.tau, fft, {K})[0];
                const double iv =
                    pricing::implied_vol(call, pe->spot, K, q.tau, df_dom, df_for, true);
                double price = call;
                if (!q.is_call) {
                    // parity with the two fair legs
                    const double fwd_leg = charfn::discounted_cf(m, ref.dom, ref.fgn, state, q.tau,
                                                                 {0.0, -1.0})
                                               .real();
                    const double bond_leg =
                        charfn::discounted_cf(m, ref.dom, ref.fgn, state, q.tau, {0.0, 0.0}).real();
                    price = call - fwd_leg + K * bond_leg;
                }
                csv << q.pair << ',' << fmt(q.tau) << ',' << fmt(K) << ',' << q.moneyness.str()
                    << ',' << (q.is_call ? 'C' : 'P') << ',' << fmt(price) << ',' << fmt(iv)
                    << '\n';
            }
            emit(out_path, csv.str(), config);
            return 0;
        }

        if (app.got_subcommand(cal)) {
            const auto init = model::load_model(model_path);
            const auto env = calib::load_env(env_path);
            const auto quotes = calib::load_surface(surface_path);
            if (dry_run) {
                std::cout << "ok: model, env and surface valid (" << quotes.size()
                          << " quotes)\n";
                return 0;
            }
            if (!seed_set) throw ValidationError("calibrate: --seed is required");
            config["command"] = "calibrate";
            config["surface"] = surface_path;
            config["env"] = env_path;
            config["seed"] = seed;
            config["scatter"] = scatter;
            config["nm_evals"] = nm_evals;
            config["lm_iters"] = lm_iters;
            calib::OptimizerConfig ocfg;
            ocfg.seed = seed;
            ocfg.scatter_starts = scatter;
            ocfg.nm_max_evals = nm_evals;
            ocfg.lm_max_iters = lm_iters;
            ocfg.fft.alpha = alpha;
            ocfg.fft.n_points = fft_n;
            ocfg.fft.eta = fft_eta;
            const auto report = calib::calibrate(init, quotes, env, ocfg);
            json jr;
            jr["fitted_model"] = json::parse(model::model_to_json(report.fitted));
            jr["objective"] = report.objective;
            jr["residual_norm"] = report.residual_norm;
            jr["residuals"] = report.residuals;
            jr["iterations"] = report.iterations;
            jr["evaluations"] = report.evaluations;
            jr["converged"] = report.converged;
            jr["failed_quotes"] = report.failed_quotes;
            jr["feller_repairs"] = report.feller_repairs;
            emit(out_path, jr.dump(2) + "\n", config);
            std::cout << "objective " << report.objective << " (residual norm "
                      << report.residual_norm << ", " << report.evaluations << " evaluations)\n"
                      << calib::regime_report(report.fitted);
            return 0;
        }

        if (app.got_subcommand(sim)) {
            const auto m = model::load_model(model_path);
            const int ci = currency_or_throw(m, currency);
            if (dry_run) {
                std::cout << "ok: model valid\n";
                return 0;
            }
            if (!seed_set) throw ValidationError("simulate: --seed is required");
            config["command"] = "simulate";
            config["currency"] = currency;
            config["seed"] = seed;
            config["paths"] = paths;
            config["dt"] = dt;
            config["horizon"] = horizon;
            config["store_dt"] = store_dt;
            config["scheme"] = scheme_name;
            mc::McConfig mcfg;
            mcfg.dt = dt;
            mcfg.horizon = horizon;
            mcfg.n_paths = paths;
            mcfg.seed = seed;
            mcfg.store_dt = store_dt;
            if (scheme_name == "euler") {
                mcfg.scheme = mc::Scheme::FullTruncationEuler;
            } else if (scheme_name == "exact") {
                mcfg.scheme = mc::Scheme::ExactTransition;
            } else {
                throw ValidationError("simulate: scheme must be euler or exact");
            }
            const auto bundle = mc::simulate_market(m, model::default_state(m), mcfg);
            std::ostringstream csv;
            csv << "path_id,t";
            for (int k = 0; k < m.d(); ++k) csv << ",V" << (k + 1);
            csv << ",Bhat_" << currency << ",QV\n";
            for (int p = 0; p < bundle.n_paths; ++p) {
                for (int t = 0; t < bundle.n_times(); ++t) {
                    csv << p << ',' << fmt(bundle.times[t]);
                    for (int k = 0; k < m.d(); ++k) csv << ',' << fmt(bundle.v(p, t, k));
                    csv << ',' << fmt(bundle.bhat(p, t, ci)) << ',' << fmt(bundle.qv(p, t, ci))
                        << '\n';
                }
            }
            emit(out_path, csv.str(), config);
            std::vector<double> terminal(bundle.n_paths);
            for (int p = 0; p < bundle.n_paths; ++p) {
                terminal[p] = bundle.bhat(p, bundle.n_times() - 1, ci);
            }
            const auto defect = mc::martingale_defect(terminal, 1.0);
            std::cout << "martingale defect at t=" << horizon << ": " << defect.mean << " (s.e. "
                      << defect.std_error << ", " << paths << " paths, floor hits "
                      << bundle.floor_hits << ")\n";
            return 0;
        }

        if (app.got_subcommand(hedge)) {
            const auto m = model::load_model(model_path);
            const int ci = currency_or_throw(m, currency);
            if (dry_run) {
                std::cout << "ok: model valid\n";
                return 0;
            }
            if (!seed_set) throw ValidationError("hedge-backtest: --seed is required");
            config["command"] = "hedge-backtest";
            config["currency"] = currency;
            config["seed"] = seed;
            config["paths"] = paths;
            config["dt"] = dt;
            config["horizon"] = horizon;
            config["rebalance_dt"] = rebalance_dt;
            mc::McConfig mcfg;
            mcfg.dt = dt;
            mcfg.horizon = horizon;
            mcfg.n_paths = paths;
            mcfg.seed = seed;
            mcfg.store_dt = rebalance_dt;
            const auto bundle = mc::simulate_market(m, model::default_state(m), mcfg);
            const auto result = hedging::backtest(m, ci, bundle, horizon);
            std::ostringstream csv;
            csv << "path_id,terminal_error,eta_T\n";
            for (int p = 0; p < static_cast<int>(result.eta_T.size()); ++p) {
                csv << p << ',' << fmt(result.terminal_error[p]) << ',' << fmt(result.eta_T[p])
                    << '\n';
            }
            emit(out_path, csv.str(), config);
            json summary;
            summary["mean_eta_T"] = result.mean_error;
            summary["std_error"] = result.std_error;
            summary["eta_bhat_corr"] = result.eta_bhat_corr;
            summary["max_reconstruction_error"] = result.max_reconstruction_error;
            summary["initial_cost"] = result.initial_cost;
            summary["formal_risk_neutral_cost"] =
                std::exp(-m.currencies[ci].h * horizon);
            if (!out_path.empty()) {
                write_text(out_path + ".summary.json", summary.dump(2) + "\n");
            }
            std::cout << "hedge backtest: mean eta_T " << result.mean_error << " (s.e. "
                      << result.std_error << "), initial cost " << result.initial_cost
                      << " vs risk-neutral " << std::exp(-m.currencies[ci].h * horizon) << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace fx42::cli
