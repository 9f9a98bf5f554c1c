#pragma once

#include <functional>
#include <string>
#include <vector>

#include "holofun/config.hpp"
#include "holofun/function.hpp"
#include "holofun/holographic.hpp"
#include "holofun/network.hpp"
#include "holofun/polynomial.hpp"
#include "holofun/regularity.hpp"
#include "holofun/sampling.hpp"

namespace holofun {

using Evaluator = std::function<double(const BitString&)>;

struct SupNormResult {
    double max_error = 0.0;
    BitString argmax;
};

// Exact max |f(x) - g(x)| over all 2^n inputs.
SupNormResult sup_norm_error(const Evaluator& f, const Evaluator& g, int n, const Limits& limits = {});

struct StageReport {
    std::string name;
    double target = 0.0;
    double measured = 0.0;
    double slack = 0.0;  // statistical slack added to the target (MC stages)
    bool pass = false;
    std::string mode;
    double realized_complexity = 0.0;
};

struct PipelineConfig {
    double eps = 0.2;
    std::uint64_t seed = 0;
    SearchMode search = SearchMode::Exhaustive;
    CheckMode cert_mode = CheckMode::Exact;
    int cert_trials = 10000;     // per input, MC certification
    int stage_c_trials = 2000;   // per input, stage (c) failure estimation
    Limits limits = {};
};

struct PipelineReport {
    double eps = 0.0;
    std::uint64_t seed = 0;
    // Certification of the input scheme at (k, eps).
    double cert_failure = 0.0;
    double cert_slack = 0.0;
    bool cert_ok = false;
    std::string cert_mode;
    bool proceeded_uncertified = false;  // measured failure above eps; run continues, flagged
    std::vector<StageReport> stages;     // holo->poly, poly->nn, nn->holo
    bool all_pass = false;
};

// Chains holo_to_poly -> compile_poly_to_nn -> nn_to_holo and checks the
// three stage bounds (3 eps exhaustive, eps exhaustive, 3 eps Monte Carlo).
PipelineReport run_pipeline(const FuzzyFunction& f, const HoloScheme& scheme, const PipelineConfig& config);

struct LemmaResult {
    std::string name;
    bool pass = false;
    std::string detail;  // counterexample dump on failure
};

struct LemmaSuiteReport {
    std::uint64_t seed = 0;
    std::vector<LemmaResult> results;
    bool all_pass = false;
};

// Randomized invariant battery: test averaging, energy increments, box
// approximation identity, multiplication-module constants, Hoeffding bounds,
// identical-sampling failure bound. inject_fault corrupts one step array to
// prove the box-approximation check can fail.
LemmaSuiteReport lemma_suite(std::uint64_t seed, bool inject_fault = false);

std::string render_pipeline_report(const PipelineReport& report);
std::string render_lemma_report(const LemmaSuiteReport& report);

}  // namespace holofun
