#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fx42::optim {

using ScalarFn = std::function<double(std::span<const double>)>;
using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;

struct Bounds {
    std::vector<double> lo, hi;
    void clamp(std::span<double> x) const;
};

struct Result {
    std::vector<double> x;
    double fval = 0.0;
    int evals = 0;
    int iterations = 0;
    bool converged = false;
};

struct NelderMeadConfig {
    int max_evals = 500;
    double f_tol = 1e-12;   // relative spread of simplex values
    double step = 0.10;     // initial simplex step, relative to bound width
};

/// Derivative-free simplex descent with projection onto the bounds.
Result nelder_mead(const ScalarFn& f, std::span<const double> x0, const Bounds& bounds,
                   const NelderMeadConfig& cfg);

struct LevenbergMarquardtConfig {
    int max_iters = 60;
    double fd_step = 1e-6;        // forward-difference step, relative
    double lambda0 = 1e-3;
    double f_tol = 1e-14;         // stop when the relative improvement drops below
    double step_tol = 1e-12;
};

/// Damped least squares on a residual vector with a forward-difference
/// Jacobian and projection onto the bounds. Deterministic.
Result levenberg_marquardt(const ResidualFn& r, std::span<const double> x0, const Bounds& bounds,
                           const LevenbergMarquardtConfig& cfg);

}  // namespace fx42::optim
