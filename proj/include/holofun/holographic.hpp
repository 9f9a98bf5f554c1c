#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "holofun/config.hpp"
#include "holofun/function.hpp"
#include "holofun/measure.hpp"

namespace holofun {

struct SamplerPlan;  // sampling.hpp
class HoloScheme;

// Test functions given as explicit 2^k tables per location tuple. Only
// tuples with positive product measure need entries; a missing entry for a
// reachable tuple is an evaluation-time error.
struct ExplicitTests {
    std::map<std::vector<int>, std::vector<double>> entries;
};

// f_s(a) = sigma(mean(a)), independent of s.
struct MeanTest {
    Activation sigma;
};

// Tests realized by the deterministic reconstruction of a sampler plan.
struct PlanTest {
    std::shared_ptr<const SamplerPlan> plan;
};

// Tests of an identically-sampled scheme derived from a base scheme:
// g_t(a) is the posterior-label average of the base tests (first-occurrence
// relabeling, 0 when a label is missing). Lazily evaluated and memoized.
struct PosteriorTests {
    std::shared_ptr<const HoloScheme> base;
    double eps = 0.0;
    bool exact = true;        // exact posterior enumeration vs sampled labels
    int label_draws = 10000;  // sampled mode
    std::uint64_t seed = 0;   // sampled mode: per-(t,a) derived streams

    struct Cache {
        std::mutex mu;
        std::map<std::pair<std::vector<int>, std::vector<Bit>>, double> values;
    };
    std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

class HoloScheme {
public:
    using Tests = std::variant<ExplicitTests, MeanTest, PlanTest, PosteriorTests>;

    // k is integer-valued but stored as double: schemes derived from sampler
    // plans declare the padded position count, which can exceed 2^53. Only
    // the first `materialized_positions` have individually stored measures;
    // the rest repeat the final (padding) run.
    HoloScheme(int n, double k, std::vector<MeasureRun> runs, Tests tests);

    int n() const { return n_; }
    double k() const { return k_; }
    // Throws unless k fits comfortably in an int.
    int k_int() const;
    std::span<const MeasureRun> measure_runs() const { return runs_; }
    const CoordinateMeasure& measure(double position) const;
    const Tests& tests() const { return tests_; }

    // f_s evaluated at locations s with sampled bits; s and bits have length
    // k (or the materialized prefix for plan-backed schemes).
    double test_value(std::span<const int> s, std::span<const Bit> bits) const;

private:
    int n_;
    double k_;
    std::vector<MeasureRun> runs_;
    Tests tests_;
};

enum class CheckMode { Exact, MonteCarlo };

struct HoloCheckReport {
    double eps_target = 0.0;
    double worst_failure_rate = 0.0;
    BitString worst_input;
    CheckMode mode = CheckMode::Exact;
    int trials = 0;  // per input, Monte Carlo only
};

struct SchemeSample {
    double value = 0.0;
    std::vector<int> locations;
};

// Draw S_j ~ mu_j independently and evaluate f_S(x_S).
SchemeSample eval_scheme_once(const HoloScheme& scheme, const BitString& x, Rng& rng,
                              const Limits& limits = {});

// Exact F(x) = E f_S(x_S), enumerating the support product.
double averaged_test(const HoloScheme& scheme, const BitString& x, const Limits& limits = {});

// Exact product-measure mass of {s : |f(x) - f_s(x_s)| > eps}.
double failure_probability_exact(const HoloScheme& scheme, const FuzzyFunction& f, const BitString& x,
                                 double eps, const Limits& limits = {});

// Empirical frequency over `trials` independent draws. Plan-backed schemes
// use the distribution-exact count simulation from sampling.hpp, so huge
// layouts cost O(plan nodes) per trial.
double failure_probability_mc(const HoloScheme& scheme, const FuzzyFunction& f, const BitString& x,
                              double eps, int trials, Rng& rng, const Limits& limits = {});

// Max failure probability over all 2^n inputs, with the worst input.
HoloCheckReport holo_check(const HoloScheme& scheme, const FuzzyFunction& f, double eps, CheckMode mode,
                           int trials, std::uint64_t seed, const Limits& limits = {});

// Smallest eps for which the scheme certifies: fail(x, eps) <= eps for all x.
// Exact enumeration; n and n^k must be within limits.
double measured_holographic_eps(const HoloScheme& scheme, const FuzzyFunction& f, const Limits& limits = {});

// Hoeffding sample count ceil(2 eps^-2 ln(2/eps)).
int example1_sample_count(double eps);

// The weighted-average scheme: r identical measures mu and the mean test
// sigma(mean of sampled bits). Requires Lip(sigma) <= 1 and range in [0,1].
HoloScheme build_example1_scheme(const CoordinateMeasure& mu, const Activation& sigma, double eps);

// Exact scheme for a junta: point masses at its coordinates, tests read the
// sampled bits straight into the junta table.
HoloScheme build_junta_scheme(const FuzzyFunction& junta);

double identicalize_sample_count(double k, double eps);

struct IdenticalizeReport {
    double r = 0.0;
    double eps = 0.0;
    double alpha_budget = 0.0;  // eps^2 / 4; caller asserts the input scheme meets it
    bool exact_posterior = true;
    int label_draws = 0;
};

// All-positions-identical scheme sampling from the average measure, with
// posterior-averaged tests. r = ceil(k ln(2k / eps^2)).
std::pair<HoloScheme, IdenticalizeReport> identicalize(const HoloScheme& scheme, double eps,
                                                       std::uint64_t seed = 0, const Limits& limits = {});

}  // namespace holofun
