#pragma once

namespace holofun {

// Resource budgets for exact modes. Every exhaustive operation checks one of
// these and throws LimitExceeded instead of silently running forever.
struct Limits {
    int table_n_limit = 20;            // max n for explicit 2^n value tables
    int exhaustive_n_limit = 12;       // max n for sup-norm sweeps over all inputs
    int mc_sweep_n_limit = 8;          // max n for per-input Monte Carlo sweeps
    double enumeration_term_limit = 1e6;   // product-space terms in exact expectations
    double box_search_budget = 5e7;        // work bound for exhaustive violating-box search
    double literal_sample_budget = 1e7;    // coordinate draws per literal sampler run
    double posterior_enum_limit = 1e6;     // label tuples for exact posterior averaging
    int posterior_label_draws = 10000;     // sampled-posterior fallback draws
    double poly_prune_eps = 1e-12;         // drop |coef| below this after assembly
};

}  // namespace holofun
