#pragma once

namespace fx42 {

// Every numerical tolerance used by the library lives here so a caller can
// tighten or relax them in one place. Defaults are what the test suite runs.
struct NumericPolicy {
    // Kummer 1F1 power series
    double hyp1f1_rel_tol = 1e-14;
    int hyp1f1_max_terms = 10000;
    // regularized incomplete gamma (series / continued fraction split)
    double inc_gamma_rel_tol = 1e-15;
    int inc_gamma_max_iter = 10000;
    // adaptive Gauss-Kronrod quadrature for the Fourier price integral
    double quad_rel_tol = 1e-10;
    double quad_abs_tol = 1e-14;
    int quad_max_depth = 30;
    double quad_panel_width = 16.0;   // initial panel size in the u variable
    double quad_tail_tol = 1e-14;     // stop extending panels once a panel adds less
    int quad_max_panels = 64;
    // implied vol inversion
    double implied_vol_price_tol = 1e-14;  // times spot
    int implied_vol_max_iter = 200;
    // linear solves (hedge construction)
    double condition_limit = 1e10;
};

inline const NumericPolicy& default_policy() {
    static const NumericPolicy p{};
    return p;
}

}  // namespace fx42
