#include "holofun/holographic.hpp"

#include <algorithm>
#include <cmath>

#include "holofun/detail/product_iter.hpp"
#include "holofun/errors.hpp"
#include "holofun/sampling.hpp"

namespace holofun {

namespace {

constexpr double kMaxEnumPositions = 1e6;

std::uint64_t tuple_hash(std::span<const int> t, std::span<const Bit> a) {
    std::uint64_t h = 0x9ae16a3b2f90404fULL;
    for (int v : t) h = mix64(h ^ static_cast<std::uint64_t>(v));
    for (Bit b : a) h = mix64(h ^ (b ? 0x1234567ULL : 0x89abcdefULL));
    return h;
}

// Measures of positions 0..k-1, expanded from the runs. Requires small k.
std::vector<const CoordinateMeasure*> expanded_positions(const HoloScheme& scheme) {
    double k = scheme.k();
    if (!(k <= kMaxEnumPositions))
        throw LimitExceeded("scheme has too many positions for explicit enumeration");
    std::vector<const CoordinateMeasure*> out;
    out.reserve(static_cast<std::size_t>(k));
    for (const auto& run : scheme.measure_runs())
        for (double c = 0; c < run.count; ++c) out.push_back(&run.measure);
    return out;
}

// log of the support-product size, +inf when it overflows.
double log_enumeration_terms(const HoloScheme& scheme) {
    double log_terms = 0.0;
    for (const auto& run : scheme.measure_runs()) {
        std::size_t supp = run.measure.support().size();
        if (supp == 0) return std::numeric_limits<double>::infinity();
        log_terms += run.count * std::log(static_cast<double>(supp));
    }
    return log_terms;
}

void check_enumeration_budget(const HoloScheme& scheme, const Limits& limits) {
    if (log_enumeration_terms(scheme) > std::log(limits.enumeration_term_limit) + 1e-9)
        throw LimitExceeded("exact enumeration over the scheme's location tuples exceeds the term limit");
}

double posterior_test_value(const PosteriorTests& pt, std::span<const int> t, std::span<const Bit> a);

// Visits every location tuple with positive product measure, calling
// fn(test_value, weight). Exact-mode workhorse for F(x) and failure mass.
template <class Fn>
void enumerate_exact(const HoloScheme& scheme, const BitString& x, const Limits& limits, Fn&& fn) {
    check_dimension(x.size(), static_cast<std::size_t>(scheme.n()), "enumerate_exact");

    if (const auto* explicit_tests = std::get_if<ExplicitTests>(&scheme.tests())) {
        // The entry map is the enumeration; verify it covers the support.
        int k = scheme.k_int();
        double total = 0.0;
        BitString bits(static_cast<std::size_t>(k));
        for (const auto& [s, table] : explicit_tests->entries) {
            if (static_cast<int>(s.size()) != k) throw InvalidInput("explicit test tuple of wrong arity");
            double w = 1.0;
            for (int j = 0; j < k && w > 0.0; ++j) w *= scheme.measure(j).weight(s[static_cast<std::size_t>(j)]);
            if (w <= 0.0) continue;
            for (int j = 0; j < k; ++j) bits[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])];
            fn(table[bit_index(bits)], w);
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw InvalidInput("explicit tests missing entries on positive-measure tuples");
        return;
    }

    check_enumeration_budget(scheme, limits);
    auto positions = expanded_positions(scheme);
    const int k = static_cast<int>(positions.size());
    std::vector<std::vector<int>> lists(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) lists[static_cast<std::size_t>(j)] = positions[static_cast<std::size_t>(j)]->support();

    if (const auto* mean = std::get_if<MeanTest>(&scheme.tests())) {
        // f_s depends on the sampled bits only through their sum.
        std::vector<double> by_sum(static_cast<std::size_t>(k) + 1);
        for (int c = 0; c <= k; ++c)
            by_sum[static_cast<std::size_t>(c)] = mean->sigma(static_cast<double>(c) / k);
        detail::product_scan_acc(
            lists, [&](int j, int i) { return positions[static_cast<std::size_t>(j)]->weight(i); },
            [&](int, int i) { return x[static_cast<std::size_t>(i)] ? 1 : 0; },
            [&](std::span<const int>, double w, int ones) { fn(by_sum[static_cast<std::size_t>(ones)], w); });
        return;
    }

    BitString bits(static_cast<std::size_t>(k));
    detail::product_scan(lists, [&](int j, int i) { return positions[static_cast<std::size_t>(j)]->weight(i); },
                         [&](std::span<const int> s, double w) {
                             for (int j = 0; j < k; ++j)
                                 bits[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])];
                             fn(scheme.test_value(s, bits), w);
                         });
}

}  // namespace

HoloScheme::HoloScheme(int n, double k, std::vector<MeasureRun> runs, Tests tests)
    : n_(n), k_(k), runs_(std::move(runs)), tests_(std::move(tests)) {
    if (n_ <= 0) throw InvalidInput("scheme: n must be positive");
    if (!(k_ >= 1.0)) throw InvalidInput("scheme: k must be at least 1");
    if (runs_.empty()) throw InvalidInput("scheme: needs at least one measure run");
    for (const auto& run : runs_) {
        if (run.measure.n() != n_) throw InvalidInput("scheme: measure dimension mismatch");
        if (!(run.count >= 1.0)) throw InvalidInput("scheme: run counts must be positive");
    }
    double total = total_run_count(runs_);
    if (std::abs(total - k_) > std::max(1e-6, 1e-9 * k_))
        throw InvalidInput("scheme: measure run counts must sum to k");
    if (const auto* explicit_tests = std::get_if<ExplicitTests>(&tests_)) {
        int kk = k_int();
        if (kk >= 30) throw InvalidInput("scheme: explicit tests require k < 30");
        std::size_t want = std::size_t{1} << kk;
        for (const auto& [s, table] : explicit_tests->entries) {
            if (static_cast<int>(s.size()) != kk) throw InvalidInput("scheme: explicit test tuple arity");
            for (int c : s)
                if (c < 0 || c >= n_) throw InvalidInput("scheme: explicit test coordinate out of range");
            if (table.size() != want) throw InvalidInput("scheme: explicit test table must have 2^k values");
            for (double v : table)
                if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("scheme: test values must lie in [0,1]");
        }
    }
}

int HoloScheme::k_int() const {
    if (!(k_ <= 1e9) || k_ != std::floor(k_))
        throw LimitExceeded("scheme position count does not fit an explicit integer");
    return static_cast<int>(k_);
}

const CoordinateMeasure& HoloScheme::measure(double position) const {
    return run_measure_at(runs_, position);
}

double HoloScheme::test_value(std::span<const int> s, std::span<const Bit> bits) const {
    struct Visitor {
        const HoloScheme& self;
        std::span<const int> s;
        std::span<const Bit> bits;

        double operator()(const ExplicitTests& t) const {
            std::vector<int> key(s.begin(), s.end());
            auto it = t.entries.find(key);
            if (it == t.entries.end())
                throw InvalidInput("explicit tests: no entry for a sampled location tuple");
            BitString b(bits.begin(), bits.end());
            return it->second[bit_index(b)];
        }
        double operator()(const MeanTest& t) const {
            double sum = 0.0;
            for (Bit b : bits) sum += b ? 1.0 : 0.0;
            return t.sigma(sum / static_cast<double>(bits.size()));
        }
        double operator()(const PlanTest& t) const { return plan_reconstruct(*t.plan, s, bits); }
        double operator()(const PosteriorTests& t) const { return posterior_test_value(t, s, bits); }
    };
    return std::visit(Visitor{*this, s, bits}, tests_);
}

SchemeSample eval_scheme_once(const HoloScheme& scheme, const BitString& x, Rng& rng,
                              const Limits& limits) {
    check_dimension(x.size(), static_cast<std::size_t>(scheme.n()), "eval_scheme_once");
    if (const auto* plan_tests = std::get_if<PlanTest>(&scheme.tests())) {
        PlanRunResult run = run_plan(*plan_tests->plan, x, rng, limits);
        return SchemeSample{run.value, std::move(run.locations)};
    }
    if (!(scheme.k() <= limits.literal_sample_budget))
        throw LimitExceeded("eval_scheme_once: scheme position count over the literal budget");
    SchemeSample sample;
    sample.locations.reserve(static_cast<std::size_t>(scheme.k()));
    for (const auto& run : scheme.measure_runs())
        for (double c = 0; c < run.count; ++c) sample.locations.push_back(run.measure.sample(rng));
    BitString bits(sample.locations.size());
    for (std::size_t j = 0; j < sample.locations.size(); ++j)
        bits[j] = x[static_cast<std::size_t>(sample.locations[j])];
    sample.value = scheme.test_value(sample.locations, bits);
    return sample;
}

double averaged_test(const HoloScheme& scheme, const BitString& x, const Limits& limits) {
    detail::Kahan acc;
    enumerate_exact(scheme, x, limits, [&](double v, double w) { acc.add(v * w); });
    return std::clamp(acc.sum, 0.0, 1.0);
}

double failure_probability_exact(const HoloScheme& scheme, const FuzzyFunction& f, const BitString& x,
                                 double eps, const Limits& limits) {
    double fx = f(x);
    detail::Kahan mass;
    enumerate_exact(scheme, x, limits, [&](double v, double w) {
        if (std::abs(fx - v) > eps) mass.add(w);
    });
    return std::min(mass.sum, 1.0);
}

double failure_probability_mc(const HoloScheme& scheme, const FuzzyFunction& f, const BitString& x,
                              double eps, int trials, Rng& rng, const Limits& limits) {
    if (trials < 1) throw InvalidInput("failure_probability_mc: trials must be >= 1");
    double fx = f(x);
    int failures = 0;
    if (const auto* plan_tests = std::get_if<PlanTest>(&scheme.tests())) {
        PlanSimulator sim(*plan_tests->plan, x);
        for (int t = 0; t < trials; ++t)
            if (std::abs(fx - sim.draw(rng)) > eps) ++failures;
    } else {
        for (int t = 0; t < trials; ++t) {
            SchemeSample s = eval_scheme_once(scheme, x, rng, limits);
            if (std::abs(fx - s.value) > eps) ++failures;
        }
    }
    return static_cast<double>(failures) / trials;
}

HoloCheckReport holo_check(const HoloScheme& scheme, const FuzzyFunction& f, double eps, CheckMode mode,
                           int trials, std::uint64_t seed, const Limits& limits) {
    if (scheme.n() != f.n()) throw InvalidInput("holo_check: scheme and function dimension mismatch");
    int n = scheme.n();
    int n_limit = mode == CheckMode::Exact ? limits.exhaustive_n_limit : limits.mc_sweep_n_limit;
    if (n > n_limit) throw LimitExceeded("holo_check: n exceeds the exhaustive input sweep limit");

    HoloCheckReport report;
    report.eps_target = eps;
    report.mode = mode;
    report.trials = mode == CheckMode::MonteCarlo ? trials : 0;
    report.worst_failure_rate = -1.0;
    const std::uint64_t inputs = std::uint64_t{1} << n;
    for (std::uint64_t xi = 0; xi < inputs; ++xi) {
        BitString x = bits_from_index(xi, n);
        double fail;
        if (mode == CheckMode::Exact) {
            fail = failure_probability_exact(scheme, f, x, eps, limits);
        } else {
            Rng rng = make_rng(derive_seed(seed, xi));
            fail = failure_probability_mc(scheme, f, x, eps, trials, rng, limits);
        }
        if (fail > report.worst_failure_rate) {
            report.worst_failure_rate = fail;
            report.worst_input = x;
        }
    }
    return report;
}

double measured_holographic_eps(const HoloScheme& scheme, const FuzzyFunction& f, const Limits& limits) {
    if (scheme.n() != f.n()) throw InvalidInput("measured_holographic_eps: dimension mismatch");
    int n = scheme.n();
    if (n > limits.exhaustive_n_limit)
        throw LimitExceeded("measured_holographic_eps: n exceeds the exhaustive limit");
    double worst = 0.0;
    const std::uint64_t inputs = std::uint64_t{1} << n;
    for (std::uint64_t xi = 0; xi < inputs; ++xi) {
        BitString x = bits_from_index(xi, n);
        double fx = f(x);
        // Distinct positive errors with their masses; eps_x is the smallest
        // eps with tail-mass(eps) <= eps.
        std::map<double, double> mass_by_error;
        double positive_mass = 0.0;
        enumerate_exact(scheme, x, limits, [&](double v, double w) {
            double e = std::abs(fx - v);
            if (e > 0.0) {
                mass_by_error[e] += w;
                positive_mass += w;
            }
        });
        double eps_x = 0.0;
        double lo = 0.0;
        double tail = positive_mass;  // mass of {error > eps} for eps in [lo, next)
        bool done = false;
        for (const auto& [e, w] : mass_by_error) {
            double candidate = std::max(lo, tail);
            if (candidate < e) {
                eps_x = candidate;
                done = true;
                break;
            }
            lo = e;
            tail -= w;
        }
        if (!done) eps_x = std::max(lo, tail);
        worst = std::max(worst, eps_x);
    }
    return worst;
}

int example1_sample_count(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("example1_sample_count: eps must lie in (0,1)");
    return static_cast<int>(std::ceil(2.0 / (eps * eps) * std::log(2.0 / eps)));
}

HoloScheme build_example1_scheme(const CoordinateMeasure& mu, const Activation& sigma, double eps) {
    if (sigma.lipschitz() > 1.0 + 1e-9)
        throw InvalidInput("build_example1_scheme: sigma must be 1-Lipschitz");
    int r = example1_sample_count(eps);
    return HoloScheme(mu.n(), r, {MeasureRun{mu, static_cast<double>(r)}}, MeanTest{sigma});
}

HoloScheme build_junta_scheme(const FuzzyFunction& f) {
    const auto* junta = std::get_if<JuntaBody>(&f.body());
    if (junta == nullptr) throw InvalidInput("build_junta_scheme: function is not a junta");
    std::vector<MeasureRun> runs;
    runs.reserve(junta->coords.size());
    for (int c : junta->coords) runs.push_back(MeasureRun{CoordinateMeasure::point_mass(f.n(), c), 1.0});
    ExplicitTests tests;
    tests.entries.emplace(junta->coords, junta->table);
    return HoloScheme(f.n(), static_cast<double>(junta->coords.size()), std::move(runs), std::move(tests));
}

double identicalize_sample_count(double k, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("identicalize: eps must lie in (0,1)");
    return std::ceil(k * std::log(2.0 * k / (eps * eps)));
}

std::pair<HoloScheme, IdenticalizeReport> identicalize(const HoloScheme& scheme, double eps,
                                                       std::uint64_t seed, const Limits& limits) {
    int k = scheme.k_int();
    double r = identicalize_sample_count(static_cast<double>(k), eps);

    // Average measure weighted by run counts.
    std::vector<double> acc(static_cast<std::size_t>(scheme.n()), 0.0);
    for (const auto& run : scheme.measure_runs())
        for (int i = 0; i < scheme.n(); ++i)
            acc[static_cast<std::size_t>(i)] += run.count * run.measure.weight(i);
    CoordinateMeasure avg = CoordinateMeasure::from_weights(std::move(acc));

    bool exact = std::pow(static_cast<double>(k), r) <= limits.posterior_enum_limit;
    PosteriorTests tests;
    tests.base = std::make_shared<const HoloScheme>(scheme);
    tests.eps = eps;
    tests.exact = exact;
    tests.label_draws = limits.posterior_label_draws;
    tests.seed = seed;

    IdenticalizeReport report;
    report.r = r;
    report.eps = eps;
    report.alpha_budget = eps * eps / 4.0;
    report.exact_posterior = exact;
    report.label_draws = exact ? 0 : limits.posterior_label_draws;

    HoloScheme out(scheme.n(), r, {MeasureRun{avg, r}}, std::move(tests));
    return {std::move(out), report};
}

namespace {

double posterior_test_value(const PosteriorTests& pt, std::span<const int> t, std::span<const Bit> a) {
    auto key = std::make_pair(std::vector<int>(t.begin(), t.end()), std::vector<Bit>(a.begin(), a.end()));
    {
        std::lock_guard<std::mutex> lock(pt.cache->mu);
        auto it = pt.cache->values.find(key);
        if (it != pt.cache->values.end()) return it->second;
    }

    const HoloScheme& base = *pt.base;
    const int kb = base.k_int();
    const int r = static_cast<int>(t.size());
    std::vector<const CoordinateMeasure*> mus;
    mus.reserve(static_cast<std::size_t>(kb));
    for (int l = 0; l < kb; ++l) mus.push_back(&base.measure(l));

    // Posterior label distribution per position: P(label = l | t_j) is
    // mu_l(t_j) / sum_m mu_m(t_j), independent across positions.
    std::vector<std::vector<int>> label_support(static_cast<std::size_t>(r));
    std::vector<std::vector<double>> label_prob(static_cast<std::size_t>(r),
                                                std::vector<double>(static_cast<std::size_t>(kb), 0.0));
    for (int j = 0; j < r; ++j) {
        double denom = 0.0;
        for (int l = 0; l < kb; ++l) denom += mus[static_cast<std::size_t>(l)]->weight(t[static_cast<std::size_t>(j)]);
        // Positions are drawn from the average measure, so a sampled location
        // always has positive mass under some component.
        if (!(denom > 0.0))
            throw std::logic_error("posterior tests: zero denominator at a sampled location");
        for (int l = 0; l < kb; ++l) {
            double p = mus[static_cast<std::size_t>(l)]->weight(t[static_cast<std::size_t>(j)]) / denom;
            label_prob[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] = p;
            if (p > 0.0) label_support[static_cast<std::size_t>(j)].push_back(l);
        }
    }

    std::vector<int> first(static_cast<std::size_t>(kb));
    std::vector<int> s_base(static_cast<std::size_t>(kb));
    BitString bits_base(static_cast<std::size_t>(kb));
    auto labelled_value = [&](std::span<const int> labels) {
        std::fill(first.begin(), first.end(), -1);
        int seen = 0;
        for (int j = 0; j < r; ++j) {
            int l = labels[static_cast<std::size_t>(j)];
            if (first[static_cast<std::size_t>(l)] < 0) {
                first[static_cast<std::size_t>(l)] = j;
                ++seen;
            }
        }
        if (seen < kb) return 0.0;  // some label missing
        for (int l = 0; l < kb; ++l) {
            int j = first[static_cast<std::size_t>(l)];
            s_base[static_cast<std::size_t>(l)] = t[static_cast<std::size_t>(j)];
            bits_base[static_cast<std::size_t>(l)] = a[static_cast<std::size_t>(j)];
        }
        return base.test_value(s_base, bits_base);
    };

    double value;
    if (pt.exact) {
        double acc = 0.0;
        detail::product_scan(label_support,
                             [&](int j, int l) { return label_prob[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)]; },
                             [&](std::span<const int> labels, double w) { acc += w * labelled_value(labels); });
        value = acc;
    } else {
        // Deterministic test function: the label stream is derived from (t, a).
        Rng rng = make_rng(derive_seed(pt.seed, tuple_hash(t, a)));
        std::vector<int> labels(static_cast<std::size_t>(r));
        double acc = 0.0;
        for (int d = 0; d < pt.label_draws; ++d) {
            for (int j = 0; j < r; ++j) {
                double u = uniform01(rng);
                double cum = 0.0;
                int picked = label_support[static_cast<std::size_t>(j)].back();
                for (int l : label_support[static_cast<std::size_t>(j)]) {
                    cum += label_prob[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
                    if (u < cum) {
                        picked = l;
                        break;
                    }
                }
                labels[static_cast<std::size_t>(j)] = picked;
            }
            acc += labelled_value(labels);
        }
        value = acc / pt.label_draws;
    }
    value = std::clamp(value, 0.0, 1.0);

    std::lock_guard<std::mutex> lock(pt.cache->mu);
    pt.cache->values.emplace(std::move(key), value);
    return value;
}

}  // namespace

}  // namespace holofun
