#include "fx42/mc.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fx42/errors.hpp"

namespace fx42::mc {

namespace {

constexpr double kFloor = 1e-12;

// Positivity floor used when evaluating 1/sqrt(V) coefficients. The Euler
// chain can dip arbitrarily close to zero even when the true process cannot,
// and a bare 1e-12 floor would let pi^2 dt reach ~1e7 and overflow the
// exponentials. Flooring at the transition density's origin scale
// sigma^2 dt / 4 bounds pi^2 dt by 4 b^2 / sigma^2 uniformly in dt.
double eval_floor(double sigma, double dt) {
    return std::max(kFloor, 0.25 * sigma * sigma * dt);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_engine(std::uint64_t seed, long path) {
    const std::uint64_t s = splitmix64(seed + 0x5851F42D4C957F2DULL) ^
                            splitmix64(static_cast<std::uint64_t>(path) + 1);
    return std::mt19937_64(s);
}

// Runs per_path(p) for p in [0, n_paths), partitioned over threads. Each path
// derives all randomness from its own counter-based engine, so the result is
// independent of the partitioning.
template <typename F>
void run_paths(int n_paths, int n_threads, const F& per_path) {
    int workers = n_threads > 0 ? n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
    workers = std::min(workers, n_paths > 0 ? n_paths : 1);
    if (workers == 1) {
        for (int p = 0; p < n_paths; ++p) per_path(p);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &per_path] {
            for (int p = lo; p < hi; ++p) per_path(p);
        });
    }
    for (auto& t : pool) t.join();
}

struct StepGrid {
    long n_steps = 0;
    double dt = 0.0;
    long stride = 0;                // store every stride steps
    std::vector<double> times;      // stored times
    std::vector<long> store_steps;  // step indices that get stored
};

StepGrid make_grid(const McConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !(cfg.dt > 0.0)) {
        throw std::invalid_argument("mc: horizon and dt must be > 0");
    }
    StepGrid g;
    g.n_steps = std::max<long>(1, std::llround(cfg.horizon / cfg.dt));
    g.dt = cfg.horizon / static_cast<double>(g.n_steps);
    if (cfg.store_dt > 0.0) {
        g.stride = std::max<long>(1, std::llround(cfg.store_dt / g.dt));
    } else {
        g.stride = g.n_steps;
    }
    for (long s = 0; s <= g.n_steps; ++s) {
        if (s % g.stride == 0 || s == g.n_steps) {
            g.store_steps.push_back(s);
            g.times.push_back(s * g.dt);
        }
    }
    return g;
}

// One CIR step. Full truncation: coefficients evaluated at max(V,0), the
// stored state may dip below the floor only transiently. Exact: noncentral
// chi-square transition via a Poisson-mixed gamma draw.
struct CirStepper {
    const CirFactor* f;
    Scheme scheme;
    double dt;
    double ekdt;  // exp(-kappa dt), exact scheme
    double c;     // sigma^2 (1 - e^{-k dt}) / (4 k)
    double delta; // 4 kappa theta / sigma^2

    CirStepper(const CirFactor& fac, Scheme sch, double step) : f(&fac), scheme(sch), dt(step) {
        ekdt = std::exp(-f->kappa * dt);
        c = f->sigma * f->sigma * (1.0 - ekdt) / (4.0 * f->kappa);
        delta = 4.0 * f->kappa * f->theta / (f->sigma * f->sigma);
    }

    template <typename Rng>
    double step(double v, double dW, Rng& rng, long& floor_hits) const {
        if (scheme == Scheme::FullTruncationEuler) {
            const double vp = std::max(v, 0.0);
            double next = v + f->kappa * (f->theta - vp) * dt + f->sigma * std::sqrt(vp) * dW;
            if (next < kFloor) ++floor_hits;
            return next;
        }
        std::poisson_distribution<long> pois(std::max(v, 0.0) * ekdt / (2.0 * c));
        const long jumps = pois(rng);
        std::gamma_distribution<double> gam(0.5 * delta + static_cast<double>(jumps), 2.0);
        return c * gam(rng);
    }
};

}  // namespace

McEstimate estimate(std::span<const double> samples) {
    McEstimate e;
    e.n_paths = static_cast<long>(samples.size());
    if (e.n_paths == 0) return e;
    double sum = 0.0;
    for (double s : samples) sum += s;
    e.mean = sum / static_cast<double>(e.n_paths);
    if (e.n_paths < 2) return e;
    double ss = 0.0;
    for (double s : samples) ss += (s - e.mean) * (s - e.mean);
    e.std_error = std::sqrt(ss / (static_cast<double>(e.n_paths - 1))) /
                  std::sqrt(static_cast<double>(e.n_paths));
    return e;
}

CirPaths simulate_cir(const CirFactor& f, const McConfig& cfg) {
    cir::validate(f);
    const StepGrid grid = make_grid(cfg);
    CirPaths out;
    out.times = grid.times;
    out.n_paths = cfg.n_paths;
    out.values.assign(static_cast<size_t>(cfg.n_paths) * grid.times.size(), 0.0);
    std::vector<long> hits(cfg.n_paths, 0);

    const CirStepper stepper(f, cfg.scheme, grid.dt);
    const double vfloor = eval_floor(f.sigma, grid.dt);
    const double sqdt = std::sqrt(grid.dt);
    run_paths(cfg.n_paths, cfg.n_threads, [&](int p) {
        const long engine_idx = cfg.antithetic ? p / 2 : p;
        const double flip = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
        auto rng = path_engine(cfg.seed, engine_idx);
        std::normal_distribution<double> normal;
        double v = f.v0;
        size_t w = static_cast<size_t>(p) * grid.times.size();
        size_t next_store = 0;
        long hit = 0;
        for (long s = 0; s <= grid.n_steps; ++s) {
            if (next_store < grid.store_steps.size() && grid.store_steps[next_store] == s) {
                out.values[w + next_store] = std::max(v, vfloor);
                ++next_store;
            }
            if (s == grid.n_steps) break;
            const double dW = flip * normal(rng) * sqdt;
            v = stepper.step(v, dW, rng, hit);
        }
        hits[p] = hit;
    });
    for (long h : hits) out.floor_hits += h;
    return out;
}

std::vector<double> sample_cir_terminal(const CirFactor& f, double t, int n_paths,
                                        std::uint64_t seed) {
    cir::validate(f);
    if (!(t > 0.0)) throw std::invalid_argument("sample_cir_terminal: t must be > 0");
    const double ekt = std::exp(-f.kappa * t);
    const double c = f.sigma * f.sigma * (1.0 - ekt) / (4.0 * f.kappa);
    const double delta = 4.0 * f.kappa * f.theta / (f.sigma * f.sigma);
    std::vector<double> out(n_paths);
    for (int p = 0; p < n_paths; ++p) {
        auto rng = path_engine(seed, p);
        std::poisson_distribution<long> pois(f.v0 * ekt / (2.0 * c));
        std::gamma_distribution<double> gam(0.5 * delta + static_cast<double>(pois(rng)), 2.0);
        out[p] = c * gam(rng);
    }
    return out;
}

PathBundle simulate_market(const Model42& m, const MarketState& state, const McConfig& cfg) {
    model::require_valid(m);
    if (static_cast<int>(state.Y.size()) != m.N() || static_cast<int>(state.V.size()) != m.d()) {
        throw std::invalid_argument("simulate_market: state shapes must match the model");
    }
    const StepGrid grid = make_grid(cfg);
    const int d = m.d();
    const int N = m.N();
    const size_t nt = grid.times.size();

    PathBundle out;
    out.times = grid.times;
    out.n_paths = cfg.n_paths;
    out.d = d;
    out.N = N;
    out.seed = cfg.seed;
    out.dt_sim = grid.dt;
    out.V.assign(static_cast<size_t>(cfg.n_paths) * nt * d, 0.0);
    out.Y.assign(static_cast<size_t>(cfg.n_paths) * nt * N, 0.0);
    out.Bhat.assign(static_cast<size_t>(cfg.n_paths) * nt * N, 0.0);
    out.QV.assign(static_cast<size_t>(cfg.n_paths) * nt * N, 0.0);
    std::vector<long> hits(cfg.n_paths, 0);

    std::vector<CirStepper> steppers;
    std::vector<double> vfloor(d);
    steppers.reserve(d);
    for (int k = 0; k < d; ++k) {
        steppers.emplace_back(m.factors[k], cfg.scheme, grid.dt);
        vfloor[k] = eval_floor(m.factors[k].sigma, grid.dt);
    }
    const double sqdt = std::sqrt(grid.dt);
    const double dt = grid.dt;

    run_paths(cfg.n_paths, cfg.n_threads, [&](int p) {
        const long engine_idx = cfg.antithetic ? p / 2 : p;
        const double flip = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
        auto rng = path_engine(cfg.seed, engine_idx);
        std::normal_distribution<double> normal;

        std::vector<double> v(state.V.begin(), state.V.end());
        std::vector<double> y(state.Y.begin(), state.Y.end());
        std::vector<double> ln_bhat(N);
        std::vector<double> bhat_prev(N);
        std::vector<double> qv(N, 0.0);
        for (int i = 0; i < N; ++i) {
            ln_bhat[i] = -state.Y[i];  // B^i(0) = 1
            bhat_prev[i] = std::exp(ln_bhat[i]);
        }
        std::vector<double> dW(d), z(d), pi(d);
        long hit = 0;
        size_t next_store = 0;

        for (long s = 0; s <= grid.n_steps; ++s) {
            if (next_store < grid.store_steps.size() && grid.store_steps[next_store] == s) {
                const size_t base = (static_cast<size_t>(p) * nt + next_store);
                for (int k = 0; k < d; ++k) out.V[base * d + k] = std::max(v[k], vfloor[k]);
                for (int i = 0; i < N; ++i) {
                    out.Y[base * N + i] = y[i];
                    out.Bhat[base * N + i] = bhat_prev[i];
                    out.QV[base * N + i] = qv[i];
                }
                ++next_store;
            }
            if (s == grid.n_steps) break;

            for (int k = 0; k < d; ++k) {
                dW[k] = flip * normal(rng) * sqdt;
                const double dWp = flip * normal(rng) * sqdt;
                const double rho = m.factors[k].rho;
                z[k] = rho * dW[k] + std::sqrt(1.0 - rho * rho) * dWp;
            }
            for (int i = 0; i < N; ++i) {
                const auto& c = m.currencies[i];
                double pi2 = 0.0, dot = 0.0, rate = c.h;
                for (int k = 0; k < d; ++k) {
                    const double vf = std::max(v[k], vfloor[k]);
                    const double sq = std::sqrt(vf);
                    const double pik = c.a[k] * sq + c.b[k] / sq;
                    pi2 += pik * pik;
                    dot += pik * z[k];
                    rate += c.H[k] * vf + c.G[k] / vf;
                }
                y[i] += (rate + 0.5 * pi2) * dt + dot;
                ln_bhat[i] += -0.5 * pi2 * dt - dot;
                const double b_new = std::exp(ln_bhat[i]);
                qv[i] += (b_new - bhat_prev[i]) * (b_new - bhat_prev[i]);
                bhat_prev[i] = b_new;
            }
            for (int k = 0; k < d; ++k) {
                v[k] = steppers[k].step(v[k], dW[k], rng, hit);
            }
        }
        hits[p] = hit;
    });
    for (long h : hits) out.floor_hits += h;
    return out;
}

AccountPaths simulate_benchmarked_account(const Model42& m, int i, const McConfig& cfg) {
    if (i < 0 || i >= m.N()) {
        throw std::out_of_range("simulate_benchmarked_account: bad currency index");
    }
    const PathBundle bundle = simulate_market(m, model::default_state(m), cfg);
    AccountPaths out;
    out.times = bundle.times;
    out.n_paths = bundle.n_paths;
    const size_t nt = bundle.times.size();
    out.bhat.resize(static_cast<size_t>(bundle.n_paths) * nt);
    out.qv.resize(out.bhat.size());
    for (int p = 0; p < bundle.n_paths; ++p) {
        for (size_t t = 0; t < nt; ++t) {
            out.bhat[p * nt + t] = bundle.bhat(p, static_cast<int>(t), i);
            out.qv[p * nt + t] = bundle.qv(p, static_cast<int>(t), i);
        }
    }
    return out;
}

McEstimate martingale_defect(std::span<const double> terminal_values, double initial_value) {
    McEstimate e = estimate(terminal_values);
    e.mean -= initial_value;
    return e;
}

McEstimate mc_price(const Model42& m, int denom, const PayoffSpec& payoff,
                    const MarketState& state, double tau, const McConfig& cfg) {
    model::require_valid(m);
    if (denom < 0 || denom >= m.N()) throw std::out_of_range("mc_price: bad currency index");
    if (payoff.kind != PayoffSpec::Kind::Unit) {
        if (payoff.i < 0 || payoff.i >= m.N() || payoff.j < 0 || payoff.j >= m.N() ||
            payoff.i == payoff.j) {
            throw std::out_of_range("mc_price: bad exchange-rate indices");
        }
    }
    McConfig run = cfg;
    run.horizon = tau;
    run.store_dt = 0.0;  // terminal only
    const PathBundle bundle = simulate_market(m, state, run);
    const int last = bundle.n_times() - 1;
    std::vector<double> samples(bundle.n_paths);
    const double d0 = std::exp(state.Y[denom]);
    for (int p = 0; p < bundle.n_paths; ++p) {
        double h = 0.0;
        switch (payoff.kind) {
            case PayoffSpec::Kind::Unit: h = 1.0; break;
            case PayoffSpec::Kind::Spot:
                h = std::exp(bundle.y(p, last, payoff.i) - bundle.y(p, last, payoff.j));
                break;
            case PayoffSpec::Kind::Call:
                h = std::max(std::exp(bundle.y(p, last, payoff.i) - bundle.y(p, last, payoff.j)) -
                                 payoff.strike, 0.0);
                break;
            case PayoffSpec::Kind::Put:
                h = std::max(payoff.strike -
                                 std::exp(bundle.y(p, last, payoff.i) - bundle.y(p, last, payoff.j)),
                             0.0);
                break;
        }
        samples[p] = d0 * h * std::exp(-bundle.y(p, last, denom));
    }
    return estimate(samples);
}

}  // namespace fx42::mc
