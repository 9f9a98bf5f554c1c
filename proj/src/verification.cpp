#include "holofun/verification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "holofun/errors.hpp"

namespace holofun {

SupNormResult sup_norm_error(const Evaluator& f, const Evaluator& g, int n, const Limits& limits) {
    if (n > limits.exhaustive_n_limit)
        throw LimitExceeded("sup_norm_error: n exceeds the exhaustive limit");
    SupNormResult result;
    result.max_error = -1.0;
    const std::uint64_t inputs = std::uint64_t{1} << n;
    for (std::uint64_t xi = 0; xi < inputs; ++xi) {
        BitString x = bits_from_index(xi, n);
        double e = std::abs(f(x) - g(x));
        if (e > result.max_error) {
            result.max_error = e;
            result.argmax = x;
        }
    }
    return result;
}

namespace {

double binomial_slack(double p, int trials) {
    double q = std::clamp(p, 0.0, 1.0);
    return 3.0 * std::sqrt(std::max(q * (1.0 - q), 0.25 * 1e-4) / trials);
}

}  // namespace

PipelineReport run_pipeline(const FuzzyFunction& f, const HoloScheme& scheme, const PipelineConfig& config) {
    PipelineReport report;
    report.eps = config.eps;
    report.seed = config.seed;

    // Certification of the input scheme at (k, eps).
    CheckMode cert_mode = config.cert_mode;
    HoloCheckReport cert;
    try {
        cert = holo_check(scheme, f, config.eps, cert_mode, config.cert_trials,
                          derive_seed(config.seed, 1), config.limits);
    } catch (const LimitExceeded&) {
        cert_mode = CheckMode::MonteCarlo;
        cert = holo_check(scheme, f, config.eps, cert_mode, config.cert_trials,
                          derive_seed(config.seed, 1), config.limits);
    }
    report.cert_failure = cert.worst_failure_rate;
    report.cert_mode = cert_mode == CheckMode::Exact ? "exact" : "monte-carlo";
    report.cert_slack = cert_mode == CheckMode::Exact ? 0.0 : binomial_slack(config.eps, config.cert_trials);
    report.cert_ok = cert.worst_failure_rate <= config.eps + report.cert_slack + 1e-12;
    report.proceeded_uncertified = !report.cert_ok;

    // Stage (a): holographic -> polynomial, exhaustive sup-norm against f.
    SearchOptions search;
    search.mode = config.search;
    search.seed = derive_seed(config.seed, 2);
    auto [rep, conv] = holo_to_poly(scheme, config.eps, search, config.limits);
    {
        StageReport stage;
        stage.name = "holo->poly";
        stage.target = 3.0 * config.eps;
        stage.mode = config.search == SearchMode::Exhaustive ? "exhaustive-search/exact-supnorm"
                                                             : "alternating-search/exact-supnorm";
        SupNormResult sup = sup_norm_error([&](const BitString& x) { return f(x); },
                                           [&](const BitString& x) { return eval_poly(rep, x); }, f.n(),
                                           config.limits);
        stage.measured = sup.max_error;
        stage.realized_complexity = conv.complexity.K;
        stage.pass = stage.measured <= stage.target + 1e-12;
        report.stages.push_back(stage);
    }

    // Stage (b): polynomial -> network, exhaustive sup-norm against f.
    int K = poly_complexity(rep).K;
    Network net = compile_poly_to_nn(rep, K);
    {
        StageReport stage;
        stage.name = "poly->nn";
        stage.target = config.eps;
        stage.mode = "exact-supnorm";
        SupNormResult sup = sup_norm_error([&](const BitString& x) { return f(x); },
                                           [&](const BitString& x) { return net.forward(x); }, f.n(),
                                           config.limits);
        stage.measured = sup.max_error;
        stage.realized_complexity = audit_complexity(net).K;
        stage.pass = stage.measured <= stage.target + 1e-12;
        report.stages.push_back(stage);
    }

    // Stage (c): network -> holographic, Monte Carlo failure sweep at 3 eps.
    HoloScheme derived = nn_to_holo(net, config.eps);
    {
        StageReport stage;
        stage.name = "nn->holo";
        stage.target = 3.0 * config.eps;
        stage.mode = "monte-carlo";
        HoloCheckReport check = holo_check(derived, f, stage.target, CheckMode::MonteCarlo,
                                           config.stage_c_trials, derive_seed(config.seed, 3), config.limits);
        stage.measured = check.worst_failure_rate;
        stage.slack = binomial_slack(stage.target, config.stage_c_trials);
        stage.realized_complexity = derived.k();
        stage.pass = stage.measured <= stage.target + stage.slack + 1e-12;
        report.stages.push_back(stage);
    }

    report.all_pass = report.cert_ok;
    for (const auto& stage : report.stages) report.all_pass = report.all_pass && stage.pass;
    return report;
}

namespace {

CoordinateMeasure random_measure(int n, Rng& rng) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (auto& v : w) v = -std::log(std::max(uniform01(rng), 1e-12));
    return CoordinateMeasure::from_weights(std::move(w));
}

HoloScheme random_explicit_scheme(int n, int k, Rng& rng) {
    std::vector<MeasureRun> runs;
    for (int j = 0; j < k; ++j) runs.push_back(MeasureRun{random_measure(n, rng), 1.0});
    ExplicitTests tests;
    std::vector<int> s(static_cast<std::size_t>(k), 0);
    for (;;) {
        std::vector<double> table(std::size_t{1} << k);
        for (auto& v : table) v = uniform01(rng);
        tests.entries.emplace(s, std::move(table));
        int j = k - 1;
        while (j >= 0) {
            if (++s[static_cast<std::size_t>(j)] < n) break;
            s[static_cast<std::size_t>(j)] = 0;
            --j;
        }
        if (j < 0) break;
    }
    return HoloScheme(n, k, std::move(runs), std::move(tests));
}

FuzzyFunction noisy_average_table(const HoloScheme& scheme, double noise, Rng& rng, const Limits& limits) {
    int n = scheme.n();
    std::vector<double> values(std::size_t{1} << n);
    for (std::uint64_t xi = 0; xi < values.size(); ++xi) {
        BitString x = bits_from_index(xi, n);
        double f = averaged_test(scheme, x, limits);
        values[xi] = clip01(f + noise * (2.0 * uniform01(rng) - 1.0));
    }
    return FuzzyFunction::table(n, std::move(values), limits);
}

struct RegularityInstance {
    std::vector<KArray> arrays;
    std::vector<CoordinateMeasure> measures;
    double eta = 0.0;
};

RegularityInstance random_regularity_instance(int n, int k, int t, double eta, Rng& rng) {
    RegularityInstance inst;
    inst.eta = eta;
    for (int j = 0; j < k; ++j) inst.measures.push_back(random_measure(n, rng));
    std::size_t cells = 1;
    for (int j = 0; j < k; ++j) cells *= static_cast<std::size_t>(n);
    for (int i = 0; i < t; ++i) {
        std::vector<double> v(cells);
        if (i % 2 == 0) {
            // Two-level block array over a random product box; such arrays
            // have large box norms and force refinement steps.
            std::vector<std::vector<char>> box(static_cast<std::size_t>(k));
            for (auto& mask : box) {
                mask.resize(static_cast<std::size_t>(n));
                for (auto& b : mask) b = (rng() & 1u) ? 1 : 0;
            }
            for (std::size_t flat = 0; flat < cells; ++flat) {
                std::size_t rest = flat;
                bool inside = true;
                for (int j = k - 1; j >= 0; --j) {
                    int coord = static_cast<int>(rest % static_cast<std::size_t>(n));
                    rest /= static_cast<std::size_t>(n);
                    inside = inside && box[static_cast<std::size_t>(j)][static_cast<std::size_t>(coord)];
                }
                v[flat] = inside ? 0.9 : 0.1;
            }
        } else {
            for (auto& e : v) e = uniform01(rng);
        }
        inst.arrays.push_back(KArray::dense(n, k, std::move(v)));
    }
    return inst;
}

// Independent full-enumeration oracle for the box approximation identity:
// max over all product boxes of |E[g 1_A] - sum_u W(u) prod mu_j(A_j cap T_u)|.
double box_identity_gap(const KArray& g, const StepArray& w, const Partition& p,
                        std::span<const CoordinateMeasure> measures) {
    const int n = g.n();
    const int k = g.k();
    const std::uint64_t masks = std::uint64_t{1} << n;
    std::vector<std::uint64_t> box_masks(static_cast<std::size_t>(k), 0);
    double worst = 0.0;
    std::vector<int> s(static_cast<std::size_t>(k));
    for (;;) {
        // lhs: direct sum over tuples inside the box.
        double lhs = 0.0;
        std::fill(s.begin(), s.end(), 0);
        for (;;) {
            bool inside = true;
            double weight = 1.0;
            for (int j = 0; j < k && inside; ++j) {
                int c = s[static_cast<std::size_t>(j)];
                if (!(box_masks[static_cast<std::size_t>(j)] >> c & 1u))
                    inside = false;
                else
                    weight *= measures[static_cast<std::size_t>(j)].weight(c);
            }
            if (inside && weight > 0.0) lhs += g.value(s) * weight;
            int j = k - 1;
            while (j >= 0) {
                if (++s[static_cast<std::size_t>(j)] < n) break;
                s[static_cast<std::size_t>(j)] = 0;
                --j;
            }
            if (j < 0) break;
        }
        // rhs: step-array sum with per-part intersected masses.
        std::vector<std::vector<double>> cut(static_cast<std::size_t>(k),
                                             std::vector<double>(static_cast<std::size_t>(p.m), 0.0));
        for (int j = 0; j < k; ++j)
            for (int c = 0; c < n; ++c)
                if (box_masks[static_cast<std::size_t>(j)] >> c & 1u)
                    cut[static_cast<std::size_t>(j)][static_cast<std::size_t>(p.labels[static_cast<std::size_t>(c)])] +=
                        measures[static_cast<std::size_t>(j)].weight(c);
        double rhs = 0.0;
        std::vector<int> u(static_cast<std::size_t>(k), 0);
        for (;;) {
            double prod = w.at(u);
            for (int j = 0; j < k; ++j)
                prod *= cut[static_cast<std::size_t>(j)][static_cast<std::size_t>(u[static_cast<std::size_t>(j)])];
            rhs += prod;
            int j = k - 1;
            while (j >= 0) {
                if (++u[static_cast<std::size_t>(j)] < p.m) break;
                u[static_cast<std::size_t>(j)] = 0;
                --j;
            }
            if (j < 0) break;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
        int j = k - 1;
        while (j >= 0) {
            if (++box_masks[static_cast<std::size_t>(j)] < masks) break;
            box_masks[static_cast<std::size_t>(j)] = 0;
            --j;
        }
        if (j < 0) break;
    }
    return worst;
}

std::string format_bits(const BitString& x) {
    std::string s;
    for (Bit b : x) s += b ? '1' : '0';
    return s;
}

}  // namespace

LemmaSuiteReport lemma_suite(std::uint64_t seed, bool inject_fault) {
    LemmaSuiteReport report;
    report.seed = seed;
    Limits limits;

    // Averaging the tests: ||f - F||_inf <= 2 eps* for the measured eps*.
    {
        LemmaResult r{"test-average", true, ""};
        Rng rng = make_rng(derive_seed(seed, 10));
        for (int inst = 0; inst < 6 && r.pass; ++inst) {
            int n = 3 + static_cast<int>(rng() % 4);
            int k = 1 + static_cast<int>(rng() % 2);
            HoloScheme scheme = random_explicit_scheme(n, k, rng);
            FuzzyFunction f = noisy_average_table(scheme, 0.3, rng, limits);
            double eps_star = measured_holographic_eps(scheme, f, limits);
            SupNormResult sup = sup_norm_error([&](const BitString& x) { return f(x); },
                                               [&](const BitString& x) { return averaged_test(scheme, x, limits); },
                                               n, limits);
            if (sup.max_error > 2.0 * eps_star + 1e-9) {
                r.pass = false;
                std::ostringstream os;
                os << "instance " << inst << ": sup error " << sup.max_error << " > 2*" << eps_star
                   << " at x=" << format_bits(sup.argmax);
                r.detail = os.str();
            }
        }
        report.results.push_back(std::move(r));
    }

    // Energy increments of at least eta^2 per refinement step, step count
    // within ceil(t/eta^2), monotone under refinement.
    std::vector<RegularityInstance> instances;
    std::vector<RegularizeResult> reg_results;
    {
        LemmaResult r{"energy-increment", true, ""};
        Rng rng = make_rng(derive_seed(seed, 20));
        for (int inst = 0; inst < 6; ++inst) {
            int n = 3 + static_cast<int>(rng() % 4);
            int k = 1 + static_cast<int>(rng() % 2);
            int t = 1 + static_cast<int>(rng() % 3);
            instances.push_back(random_regularity_instance(n, k, t, 0.15, rng));
        }
        for (std::size_t inst = 0; inst < instances.size(); ++inst) {
            auto& in = instances[inst];
            SearchOptions search;
            search.mode = SearchMode::Exhaustive;
            reg_results.push_back(
                weak_box_regularize(in.arrays, in.measures, in.eta, Partition::trivial(in.measures[0].n()),
                                    search, limits));
            const auto& res = reg_results.back();
            double bound = std::ceil(in.arrays.size() / (in.eta * in.eta));
            if (static_cast<double>(res.trace.steps.size()) > bound) {
                r.pass = false;
                r.detail = "instance " + std::to_string(inst) + ": step count over ceil(t/eta^2)";
            }
            for (const auto& step : res.trace.steps)
                if (step.energy_after - step.energy_before < in.eta * in.eta - 1e-9) {
                    r.pass = false;
                    r.detail = "instance " + std::to_string(inst) + ": step gained less than eta^2";
                }
            double coarse = energy(in.arrays, Partition::trivial(in.measures[0].n()), in.measures);
            double fine = energy(in.arrays, res.partition, in.measures);
            if (fine < coarse - 1e-9) {
                r.pass = false;
                r.detail = "instance " + std::to_string(inst) + ": energy decreased under refinement";
            }
        }
        report.results.push_back(std::move(r));
    }

    // Box approximation identity over every product box.
    {
        LemmaResult r{"box-approximation", true, ""};
        if (inject_fault) {
            // A corrupted step array on a constant instance: the full-box
            // discrepancy is 0.5 and must be flagged.
            KArray h = KArray::procedural(4, 1, [](std::span<const int>) { return 0.5; });
            std::vector<CoordinateMeasure> ms{CoordinateMeasure::uniform(4)};
            StepArray corrupted{1, 1, {1.0}};
            double gap = box_identity_gap(h, corrupted, Partition::trivial(4), ms);
            if (gap > 0.15) {
                r.pass = false;
                std::ostringstream os;
                os << "injected fault detected: box identity gap " << gap << " > eta 0.15";
                r.detail = os.str();
            }
        }
        for (std::size_t inst = 0; inst < instances.size() && r.pass; ++inst) {
            auto& in = instances[inst];
            const auto& res = reg_results[inst];
            for (std::size_t i = 0; i < in.arrays.size() && r.pass; ++i) {
                double gap = box_identity_gap(in.arrays[i], res.step_arrays[i], res.partition, in.measures);
                if (gap > in.eta + 1e-9) {
                    r.pass = false;
                    std::ostringstream os;
                    os << "instance " << inst << " array " << i << ": box identity gap " << gap << " > eta "
                       << in.eta;
                    r.detail = os.str();
                }
            }
        }
        report.results.push_back(std::move(r));
    }

    // Multiplication module: exact product and the stated constants.
    {
        LemmaResult r{"mult-module", true, ""};
        NetworkBuilder builder(1);
        NodeRef u = builder.add_vertex(0.0, {}, Activation::identity_clip());
        NodeRef v = builder.add_vertex(0.0, {}, Activation::identity_clip());
        NodeRef prod = builder.add_mult_module(u, v);
        Network net = std::move(builder).build(prod);
        NetComplexity audit = audit_complexity(net);
        if (audit.max_affine_l1 > 3.0 + 1e-12 || audit.max_lipschitz > 2.0 + 1e-12) {
            r.pass = false;
            r.detail = "module constants out of bounds";
        }
        for (int iu = 0; iu <= 20 && r.pass; ++iu)
            for (int iv = 0; iv <= 20 && r.pass; ++iv) {
                double uu = iu / 20.0, vv = iv / 20.0;
                auto vertices = net.vertices();
                vertices[0].bias = uu;
                vertices[1].bias = vv;
                Network grid(net.n(), std::move(vertices), net.output());
                double out = grid.forward(BitString{0});
                if (std::abs(out - uu * vv) > 1e-12) {
                    r.pass = false;
                    std::ostringstream os;
                    os << "u=" << uu << " v=" << vv << " out=" << out;
                    r.detail = os.str();
                }
            }
        report.results.push_back(std::move(r));
    }

    // Hoeffding sampler: failure band and unbiasedness.
    {
        LemmaResult r{"hoeffding-affine", true, ""};
        Rng rng = make_rng(derive_seed(seed, 30));
        for (int inst = 0; inst < 3 && r.pass; ++inst) {
            int n = 4 + static_cast<int>(rng() % 5);
            double B = inst % 2 == 0 ? 1.0 : 2.0;
            std::map<int, double> w;
            double mass = 0.0;
            for (int i = 0; i < n; ++i) {
                double wi = (2.0 * uniform01(rng) - 1.0);
                w[i] = wi;
                mass += std::abs(wi);
            }
            double c = (2.0 * uniform01(rng) - 1.0) * 0.2 * B;
            for (auto& [i, wi] : w) wi *= (B - std::abs(c)) * 0.95 / mass;
            double delta = 0.15, rho = 0.15;
            AffinePlan plan = plan_affine(n, c, w, B, delta, rho);
            BitString x(static_cast<std::size_t>(n));
            for (auto& b : x) b = static_cast<Bit>(rng() & 1u);
            double truth = affine_truth(plan, x);
            int runs = 20000, failures = 0;
            double sum = 0.0, sumsq = 0.0;
            for (int t = 0; t < runs; ++t) {
                double est = run_affine(plan, x, rng);
                sum += est;
                sumsq += est * est;
                if (std::abs(est - truth) > delta) ++failures;
            }
            double freq = static_cast<double>(failures) / runs;
            double mean = sum / runs;
            double sd = std::sqrt(std::max(sumsq / runs - mean * mean, 0.0));
            double se = sd / std::sqrt(static_cast<double>(runs));
            if (freq > rho + binomial_slack(rho, runs) || std::abs(mean - truth) > 4.0 * se + 1e-12) {
                r.pass = false;
                std::ostringstream os;
                os << "instance " << inst << ": failure " << freq << ", bias " << (mean - truth)
                   << ", se " << se;
                r.detail = os.str();
            }
        }
        report.results.push_back(std::move(r));
    }

    // Identical sampling: exact per-input failure within (2 alpha + eta)/eps
    // for an exactly recoverable base scheme (alpha = 0).
    {
        LemmaResult r{"identical-sampling", true, ""};
        Rng rng = make_rng(derive_seed(seed, 40));
        std::vector<double> table(4);
        for (auto& v : table) v = uniform01(rng);
        FuzzyFunction f = FuzzyFunction::junta(5, {1, 3}, table);
        HoloScheme base = build_junta_scheme(f);
        double eps = 0.5;
        auto ident_pair = identicalize(base, eps, derive_seed(seed, 41), limits);
        const HoloScheme& ident = ident_pair.first;
        double markov = (0.0 + eps * eps / 2.0) / eps;
        for (std::uint64_t xi = 0; xi < 32 && r.pass; ++xi) {
            BitString x = bits_from_index(xi, 5);
            double fail = failure_probability_exact(ident, f, x, eps, limits);
            if (fail > markov + 1e-9) {
                r.pass = false;
                std::ostringstream os;
                os << "x=" << format_bits(x) << ": failure " << fail << " > " << markov;
                r.detail = os.str();
            }
        }
        report.results.push_back(std::move(r));
    }

    // Plan simulation agrees with literal runs in distribution.
    {
        LemmaResult r{"plan-simulation", true, ""};
        Rng rng = make_rng(derive_seed(seed, 50));
        Vertex v;
        v.bias = 0.1;
        v.in_edges = {{0, 0.5}, {2, -0.25}, {3, 0.15}};
        v.act = Activation::identity_clip();
        Network net(4, {v}, 0);
        SamplerPlan plan = plan_network(net, 0.4);
        BitString x{1, 0, 1, 0};
        PlanSimulator sim(plan, x);
        int trials = 4000;
        double lit_sum = 0.0, sim_sum = 0.0, lit_sq = 0.0, sim_sq = 0.0;
        for (int t = 0; t < trials; ++t) {
            double lv = run_plan(plan, x, rng).value;
            double sv = sim.draw(rng);
            lit_sum += lv;
            sim_sum += sv;
            lit_sq += lv * lv;
            sim_sq += sv * sv;
        }
        double lit_mean = lit_sum / trials, sim_mean = sim_sum / trials;
        double lit_var = std::max(lit_sq / trials - lit_mean * lit_mean, 0.0);
        double sim_var = std::max(sim_sq / trials - sim_mean * sim_mean, 0.0);
        double se = std::sqrt((lit_var + sim_var) / trials + 1e-12);
        if (std::abs(lit_mean - sim_mean) > 4.0 * se + 1e-9) {
            r.pass = false;
            std::ostringstream os;
            os << "literal mean " << lit_mean << " vs simulated " << sim_mean << " (se " << se << ")";
            r.detail = os.str();
        }
        report.results.push_back(std::move(r));
    }

    report.all_pass = true;
    for (const auto& r : report.results) report.all_pass = report.all_pass && r.pass;
    return report;
}

std::string render_pipeline_report(const PipelineReport& report) {
    std::ostringstream os;
    os << "pipeline eps=" << report.eps << " seed=" << report.seed << "\n";
    os << (report.cert_ok ? "PASS" : "FAIL") << " certification: worst failure " << report.cert_failure
       << " vs eps " << report.eps << " (+slack " << report.cert_slack << ", " << report.cert_mode << ")";
    if (report.proceeded_uncertified) os << " [proceeding uncertified]";
    os << "\n";
    for (const auto& stage : report.stages) {
        os << (stage.pass ? "PASS" : "FAIL") << " " << stage.name << ": measured " << stage.measured
           << " vs target " << stage.target;
        if (stage.slack > 0.0) os << " (+slack " << stage.slack << ")";
        os << " [" << stage.mode << ", realized K " << stage.realized_complexity << "]\n";
    }
    os << (report.all_pass ? "PASS" : "FAIL") << " overall\n";
    return os.str();
}

std::string render_lemma_report(const LemmaSuiteReport& report) {
    std::ostringstream os;
    os << "lemma suite seed=" << report.seed << "\n";
    for (const auto& r : report.results) {
        os << (r.pass ? "PASS" : "FAIL") << " " << r.name;
        if (!r.detail.empty()) os << ": " << r.detail;
        os << "\n";
    }
    os << (report.all_pass ? "PASS" : "FAIL") << " overall\n";
    return os.str();
}

}  // namespace holofun
