#include "fx42/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fx42/errors.hpp"

namespace fx42::optim {

void Bounds::clamp(std::span<double> x) const {
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
}

Result nelder_mead(const ScalarFn& f, std::span<const double> x0, const Bounds& bounds,
                   const NelderMeadConfig& cfg) {
    const size_t n = x0.size();
    if (bounds.lo.size() != n || bounds.hi.size() != n) {
        throw std::invalid_argument("nelder_mead: bounds dimension mismatch");
    }
    int evals = 0;
    auto eval = [&](std::vector<double>& x) {
        bounds.clamp(x);
        ++evals;
        return f(x);
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> fv;
    simplex.emplace_back(x0.begin(), x0.end());
    fv.push_back(eval(simplex[0]));
    for (size_t i = 0; i < n; ++i) {
        auto v = simplex[0];
        const double width = bounds.hi[i] - bounds.lo[i];
        double step = cfg.step * width;
        if (v[i] + step > bounds.hi[i]) step = -step;
        v[i] += step;
        simplex.push_back(v);
        fv.push_back(eval(simplex.back()));
    }

    std::vector<size_t> order(n + 1);
    Result res;
    while (evals < cfg.max_evals) {
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        const size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::abs(fv[worst] - fv[best]) <=
            cfg.f_tol * (std::abs(fv[best]) + std::abs(fv[worst]) + 1e-300)) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (size_t r = 0; r < n + 1; ++r) {
            if (r == worst) continue;
            for (size_t i = 0; i < n; ++i) centroid[i] += simplex[r][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (centroid[i] - simplex[worst][i]);
            return x;
        };
        auto xr = blend(1.0);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            auto xe = blend(2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            auto xc = blend(fr < fv[worst] ? 0.5 : -0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = std::move(xc);
                fv[worst] = fc;
            } else {
                for (size_t r = 0; r < n + 1; ++r) {
                    if (r == best) continue;
                    for (size_t i = 0; i < n; ++i) {
                        simplex[r][i] = simplex[best][i] + 0.5 * (simplex[r][i] - simplex[best][i]);
                    }
                    fv[r] = eval(simplex[r]);
                }
            }
        }
    }
    const size_t best = static_cast<size_t>(
        std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = simplex[best];
    res.fval = fv[best];
    res.evals = evals;
    return res;
}

namespace {

// Cholesky solve of (A + jitter I) x = b for a symmetric positive
// semidefinite A, growing the jitter until the factorization succeeds.
std::vector<double> solve_spd(std::vector<double> A, std::vector<double> b) {
    const size_t n = b.size();
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        std::vector<double> L = A;
        if (jitter > 0.0) {
            for (size_t i = 0; i < n; ++i) L[i * n + i] += jitter;
        }
        bool ok = true;
        for (size_t c = 0; c < n && ok; ++c) {
            double diag = L[c * n + c];
            for (size_t k = 0; k < c; ++k) diag -= L[c * n + k] * L[c * n + k];
            if (diag <= 0.0) {
                ok = false;
                break;
            }
            L[c * n + c] = std::sqrt(diag);
            for (size_t r = c + 1; r < n; ++r) {
                double v = L[r * n + c];
                for (size_t k = 0; k < c; ++k) v -= L[r * n + k] * L[c * n + k];
                L[r * n + c] = v / L[c * n + c];
            }
        }
        if (!ok) {
            jitter = jitter == 0.0 ? 1e-12 : jitter * 100.0;
            continue;
        }
        std::vector<double> y(n), x(n);
        for (size_t r = 0; r < n; ++r) {
            double v = b[r];
            for (size_t k = 0; k < r; ++k) v -= L[r * n + k] * y[k];
            y[r] = v / L[r * n + r];
        }
        for (size_t ri = n; ri-- > 0;) {
            double v = y[ri];
            for (size_t k = ri + 1; k < n; ++k) v -= L[k * n + ri] * x[k];
            x[ri] = v / L[ri * n + ri];
        }
        return x;
    }
    throw NumericError("levenberg_marquardt: normal equations not positive definite");
}

double sum_sq(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

}  // namespace

Result levenberg_marquardt(const ResidualFn& rfn, std::span<const double> x0, const Bounds& bounds,
                           const LevenbergMarquardtConfig& cfg) {
    const size_t n = x0.size();
    std::vector<double> x(x0.begin(), x0.end());
    bounds.clamp(x);
    Result res;
    std::vector<double> r = rfn(x);
    ++res.evals;
    double f = sum_sq(r);
    double lambda = cfg.lambda0;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        ++res.iterations;
        const size_t mres = r.size();
        // Forward-difference Jacobian, honoring the bounds.
        std::vector<double> J(mres * n);
        for (size_t c = 0; c < n; ++c) {
            double h = cfg.fd_step * std::max(std::abs(x[c]), 1e-4);
            if (x[c] + h > bounds.hi[c]) h = -h;
            auto xp = x;
            xp[c] += h;
            const std::vector<double> rp = rfn(xp);
            ++res.evals;
            for (size_t q = 0; q < mres; ++q) J[q * n + c] = (rp[q] - r[q]) / h;
        }
        // Normal equations.
        std::vector<double> JtJ(n * n, 0.0), Jtr(n, 0.0);
        for (size_t q = 0; q < mres; ++q) {
            for (size_t a = 0; a < n; ++a) {
                const double ja = J[q * n + a];
                if (ja == 0.0) continue;
                Jtr[a] += ja * r[q];
                for (size_t b = a; b < n; ++b) JtJ[a * n + b] += ja * J[q * n + b];
            }
        }
        for (size_t a = 0; a < n; ++a) {
            for (size_t b = 0; b < a; ++b) JtJ[a * n + b] = JtJ[b * n + a];
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 25; ++attempt) {
            auto Adamp = JtJ;
            for (size_t a = 0; a < n; ++a) {
                Adamp[a * n + a] += lambda * std::max(JtJ[a * n + a], 1e-12);
            }
            std::vector<double> neg(Jtr);
            for (double& v : neg) v = -v;
            std::vector<double> delta = solve_spd(std::move(Adamp), std::move(neg));
            auto xt = x;
            for (size_t a = 0; a < n; ++a) xt[a] += delta[a];
            bounds.clamp(xt);
            const std::vector<double> rt = rfn(xt);
            ++res.evals;
            const double ft = sum_sq(rt);
            if (ft < f) {
                double step_norm = 0.0;
                for (size_t a = 0; a < n; ++a) {
                    step_norm += (xt[a] - x[a]) * (xt[a] - x[a]);
                }
                const double improvement = f - ft;
                x = std::move(xt);
                r = rt;
                f = ft;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (improvement <= cfg.f_tol * std::max(f, 1e-300) ||
                    std::sqrt(step_norm) <= cfg.step_tol) {
                    res.converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped) {
            res.converged = true;  // no descent direction left at this scale
            break;
        }
        if (res.converged) break;
    }
    res.x = x;
    res.fval = f;
    return res;
}

}  // namespace fx42::optim
