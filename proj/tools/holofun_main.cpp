// Command-line entry point: generate example functions and schemes, run the
// representation converters, and drive the verification harnesses.
//
//   holofun gen junta --n 8 --coords 2,5 --out-function f.json --out-scheme s.json
//   holofun convert holo2poly --in s.json --out rep.json --eps 0.2
//   holofun verify pipeline --f f.json --scheme s.json --eps 0.2
//
// Exit codes: 0 pass, 1 bound violated, 2 usage/schema error.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "holofun/serialize.hpp"

using namespace holofun;

namespace {

std::vector<double> parse_csv_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_csv_coords(const std::string& csv, int n) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int v = std::stoi(item);
        if (v < 1 || v > n) throw InvalidInput("coordinate " + item + " out of range 1..n");
        out.push_back(v - 1);
    }
    return out;
}

Activation named_activation(const std::string& name) {
    if (name == "identity-clip") return Activation::identity_clip();
    if (name == "clipped-square") return Activation::clipped_square();
    throw InvalidInput("unknown activation '" + name + "' (use identity-clip or clipped-square)");
}

SearchMode parse_search(const std::string& s) {
    if (s == "exhaustive") return SearchMode::Exhaustive;
    if (s == "alternating") return SearchMode::Alternating;
    throw InvalidInput("--search must be exhaustive or alternating");
}

Evaluator evaluator_from_file(const std::string& path, const Limits& limits) {
    json doc = load_json(path);
    std::string schema = envelope_schema(doc);
    if (schema == kFunctionSchema) {
        auto f = std::make_shared<FuzzyFunction>(function_from_payload(open_envelope(doc, schema), limits));
        return [f](const BitString& x) { return (*f)(x); };
    }
    if (schema == kNetworkSchema) {
        auto net = std::make_shared<Network>(network_from_payload(open_envelope(doc, schema)));
        return [net](const BitString& x) { return net->forward(x); };
    }
    if (schema == kPolySchema) {
        auto rep = std::make_shared<PolyRep>(polyrep_from_payload(open_envelope(doc, schema)));
        return [rep](const BitString& x) { return eval_poly(*rep, x); };
    }
    if (schema == kSchemeSchema) {
        auto s = std::make_shared<HoloScheme>(scheme_from_payload(open_envelope(doc, schema), limits));
        Limits lim = limits;
        return [s, lim](const BitString& x) { return averaged_test(*s, x, lim); };
    }
    throw InvalidInput("unsupported schema '" + schema + "' for evaluation");
}

int dimension_from_file(const std::string& path) {
    json doc = load_json(path);
    return doc.at("payload").at("n").get<int>();
}

void emit_report(const json& doc, const std::string& out_path, const std::string& text) {
    if (!out_path.empty()) save_json(out_path, doc);
    std::cout << text;
}

// Every written artifact records the seed it was produced under.
json stamped(const std::string& schema, json payload, std::uint64_t seed) {
    json doc = make_envelope(schema, std::move(payload));
    doc["seed"] = seed;
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuzzy Boolean function complexity toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    double eps = 0.2;
    int trials = 10000;
    int sweep_limit = 0;  // 0 = keep defaults
    std::string search_name = "exhaustive";
    app.add_option("--seed", seed, "RNG seed recorded in every output artifact")->envname("HOLOFUN_SEED");
    app.add_option("--eps", eps, "accuracy parameter")->envname("HOLOFUN_EPS");
    app.add_option("--trials", trials, "Monte Carlo trials per input")->envname("HOLOFUN_TRIALS");
    app.add_option("--limit", sweep_limit, "override the exhaustive/MC input sweep limit (bits)")
        ->envname("HOLOFUN_LIMIT");
    app.add_option("--search", search_name, "violating-box search: exhaustive or alternating")
        ->envname("HOLOFUN_SEARCH");

    // gen
    auto* gen = app.add_subcommand("gen", "generate example functions and schemes");
    gen->require_subcommand(1);
    gen->fallthrough();
    int gen_n = 10;
    std::string gen_weights, gen_coords, gen_table, gen_sigma = "identity-clip";
    std::string out_function, out_scheme;
    int gen_k = 0;

    auto* gen_wa = gen->add_subcommand("weighted-average", "sigma(sum mu(i) x_i) and its sampling scheme");
    gen_wa->fallthrough();
    bool gen_uniform = false;
    gen_wa->add_option("--n", gen_n, "dimension")->required();
    gen_wa->add_flag("--uniform", gen_uniform, "uniform measure (the default when --weights is absent)");
    gen_wa->add_option("--weights", gen_weights, "comma-separated measure weights (default uniform)")
        ->excludes("--uniform");
    gen_wa->add_option("--sigma", gen_sigma, "activation: identity-clip or clipped-square");
    gen_wa->add_option("--k", gen_k, "override the scheme's sample count (default from --eps)");
    gen_wa->add_option("--out-function", out_function, "function JSON path");
    gen_wa->add_option("--out-scheme", out_scheme, "scheme JSON path");

    auto* gen_junta = gen->add_subcommand("junta", "junta function and its exact point-mass scheme");
    gen_junta->fallthrough();
    gen_junta->add_option("--n", gen_n, "dimension")->required();
    gen_junta->add_option("--coords", gen_coords, "comma-separated 1-based coordinates")->required();
    gen_junta->add_option("--table", gen_table, "comma-separated 2^r table values (default random)");
    gen_junta->add_option("--out-function", out_function, "function JSON path");
    gen_junta->add_option("--out-scheme", out_scheme, "scheme JSON path");

    auto* gen_parity = gen->add_subcommand("parity", "parity function (no scheme)");
    gen_parity->fallthrough();
    gen_parity->add_option("--n", gen_n, "dimension")->required();
    gen_parity->add_option("--out-function", out_function, "function JSON path");

    // convert
    auto* convert = app.add_subcommand("convert", "representation conversions");
    convert->require_subcommand(1);
    convert->fallthrough();
    std::string in_path, out_path, report_path;
    int compile_k = 0;
    bool instrument = false;
    for (const char* name : {"holo2poly", "poly2nn", "nn2holo", "identicalize"}) {
        auto* sub = convert->add_subcommand(name);
        sub->fallthrough();
        sub->add_option("--in", in_path, "input file")->required();
        sub->add_option("--out", out_path, "output file")->required();
        sub->add_option("--report", report_path, "conversion report JSON path");
        if (std::string(name) == "poly2nn")
            sub->add_option("--K", compile_k, "complexity parameter (default: the rep's realized K)");
        if (std::string(name) == "nn2holo")
            sub->add_flag("--instrument", instrument, "dump per-node sampler plan parameters");
    }

    // verify
    auto* verify = app.add_subcommand("verify", "verification harnesses");
    verify->require_subcommand(1);
    verify->fallthrough();
    std::string f_path, scheme_path, g_path, mode_name = "exact";
    auto* v_holo = verify->add_subcommand("holo", "holographic failure-rate check");
    v_holo->fallthrough();
    v_holo->add_option("--f", f_path, "function file")->required();
    v_holo->add_option("--scheme", scheme_path, "scheme file")->required();
    v_holo->add_option("--mode", mode_name, "exact or mc");
    v_holo->add_option("--out", report_path, "report JSON path");

    auto* v_sup = verify->add_subcommand("supnorm", "exhaustive sup-norm error");
    v_sup->fallthrough();
    v_sup->add_option("--f", f_path, "reference file")->required();
    v_sup->add_option("--g", g_path, "candidate file (function/network/poly-rep/scheme)")->required();
    v_sup->add_option("--out", report_path, "report JSON path");

    auto* v_pipe = verify->add_subcommand("pipeline", "full three-stage conversion pipeline");
    v_pipe->fallthrough();
    v_pipe->add_option("--f", f_path, "function file")->required();
    v_pipe->add_option("--scheme", scheme_path, "scheme file")->required();
    v_pipe->add_option("--out", report_path, "report JSON path");

    auto* v_lemmas = verify->add_subcommand("lemmas", "randomized invariant battery");
    v_lemmas->fallthrough();
    v_lemmas->add_option("--out", report_path, "report JSON path");

    // report
    auto* report_cmd = app.add_subcommand("report", "render a report JSON as text");
    report_cmd->fallthrough();
    report_cmd->add_option("--in", in_path, "report JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Limits limits;
        if (sweep_limit > 0) {
            limits.exhaustive_n_limit = sweep_limit;
            limits.mc_sweep_n_limit = sweep_limit;
        }

        if (gen_wa->parsed()) {
            CoordinateMeasure mu = gen_weights.empty()
                                       ? CoordinateMeasure::uniform(gen_n)
                                       : CoordinateMeasure::from_weights(parse_csv_doubles(gen_weights));
            if (mu.n() != gen_n) throw InvalidInput("--weights length must equal --n");
            Activation sigma = named_activation(gen_sigma);
            FuzzyFunction f = FuzzyFunction::weighted_average(mu, sigma);
            if (!out_function.empty()) save_json(out_function, stamped(kFunctionSchema, function_payload(f), seed));
            if (!out_scheme.empty()) {
                HoloScheme scheme =
                    gen_k > 0 ? HoloScheme(gen_n, gen_k, {MeasureRun{mu, static_cast<double>(gen_k)}},
                                           MeanTest{sigma})
                              : build_example1_scheme(mu, sigma, eps);
                save_json(out_scheme, stamped(kSchemeSchema, scheme_payload(scheme), seed));
                std::cout << "scheme with k=" << scheme.k() << " written to " << out_scheme << "\n";
            }
            return 0;
        }
        if (gen_junta->parsed()) {
            auto coords = parse_csv_coords(gen_coords, gen_n);
            std::vector<double> table;
            if (gen_table.empty()) {
                Rng rng = make_rng(derive_seed(seed, 0x67656e));
                table.resize(std::size_t{1} << coords.size());
                for (auto& v : table) v = uniform01(rng);
            } else {
                table = parse_csv_doubles(gen_table);
            }
            FuzzyFunction f = FuzzyFunction::junta(gen_n, coords, table);
            if (!out_function.empty()) save_json(out_function, stamped(kFunctionSchema, function_payload(f), seed));
            if (!out_scheme.empty())
                save_json(out_scheme, stamped(kSchemeSchema, scheme_payload(build_junta_scheme(f)), seed));
            return 0;
        }
        if (gen_parity->parsed()) {
            if (!out_function.empty())
                save_json(out_function, stamped(kFunctionSchema, function_payload(FuzzyFunction::parity(gen_n)), seed));
            return 0;
        }

        if (convert->parsed()) {
            const std::string& direction = convert->get_subcommands().front()->get_name();
            if (direction == "holo2poly") {
                HoloScheme scheme = load_scheme(in_path, limits);
                SearchOptions search;
                search.mode = parse_search(search_name);
                search.seed = derive_seed(seed, 0x686f6c6f);
                auto [rep, conv] = holo_to_poly(scheme, eps, search, limits);
                save_json(out_path, stamped(kPolySchema, polyrep_payload(rep), seed));
                json steps = json::array();
                for (const auto& w : conv.step_arrays) steps.push_back(step_array_to_json(w));
                json rj{{"q", conv.q},
                        {"eta", conv.eta},
                        {"refinement_steps", conv.refinement_steps},
                        {"coeff_l1", conv.coeff_l1},
                        {"coeff_l1_bound", conv.coeff_l1_bound},
                        {"target_error", conv.target_error},
                        {"prior_K_bound", conv.prior_K_bound},
                        {"search", conv.search == SearchMode::Exhaustive ? "exhaustive" : "alternating"},
                        {"realized_K", conv.complexity.K},
                        {"partition", partition_to_json(conv.partition)},
                        {"step_arrays", std::move(steps)},
                        {"trace", trace_to_json(conv.trace)},
                        {"seed", seed}};
                emit_report(make_envelope("report/holo2poly", rj), report_path,
                            "holo2poly: q=" + std::to_string(conv.q) +
                                ", realized K=" + std::to_string(conv.complexity.K) +
                                ", target error " + std::to_string(conv.target_error) + "\n");
                return 0;
            }
            if (direction == "poly2nn") {
                PolyRep rep = load_polyrep(in_path);
                int K = compile_k > 0 ? compile_k : poly_complexity(rep).K;
                Network net = compile_poly_to_nn(rep, K);
                save_json(out_path, stamped(kNetworkSchema, network_payload(net), seed));
                NetComplexity audit = audit_complexity(net);
                json rj{{"K_in", K},
                        {"vertex_count", audit.vertex_count},
                        {"max_affine_l1", audit.max_affine_l1},
                        {"max_lipschitz", audit.max_lipschitz},
                        {"realized_K", audit.K},
                        {"seed", seed}};
                emit_report(make_envelope("report/poly2nn", rj), report_path,
                            "poly2nn: " + std::to_string(audit.vertex_count) + " vertices, realized K=" +
                                std::to_string(audit.K) + "\n");
                return 0;
            }
            if (direction == "nn2holo") {
                Network net = load_network(in_path);
                HoloScheme scheme = nn_to_holo(net, eps);
                save_json(out_path, stamped(kSchemeSchema, scheme_payload(scheme), seed));
                const auto& plan = *std::get<PlanTest>(scheme.tests()).plan;
                if (instrument) {
                    std::function<void(const PlanNode&, int)> dump = [&](const PlanNode& node, int depth) {
                        std::printf("%*svertex %d: gamma=%g rho=%g r=%g range_start=%g scale=%g act=%s\n",
                                    2 * depth, "", node.vertex, node.direct.delta, node.direct.rho,
                                    node.direct.r, node.direct.range_start, node.direct.scale,
                                    node.act.name().c_str());
                        for (const auto& [beta, child] : node.children) dump(child, depth + 1);
                    };
                    dump(plan.root, 0);
                }
                json rj{{"k_declared", scheme.k()},
                        {"used_r", plan.used_r},
                        {"K", plan.K},
                        {"target_failure", 3.0 * eps},
                        {"seed", seed}};
                std::ostringstream os;
                os << "nn2holo: k=" << scheme.k() << " (materialized " << plan.used_r << "), target (k,"
                   << 3.0 * eps << ")-holographic\n";
                emit_report(make_envelope("report/nn2holo", rj), report_path, os.str());
                return 0;
            }
            if (direction == "identicalize") {
                HoloScheme scheme = load_scheme(in_path, limits);
                auto [out, info] = identicalize(scheme, eps, derive_seed(seed, 0x6964), limits);
                save_json(out_path, stamped(kSchemeSchema, scheme_payload(out), seed));
                json rj{{"r", info.r},
                        {"eps", info.eps},
                        {"alpha_budget", info.alpha_budget},
                        {"exact_posterior", info.exact_posterior},
                        {"label_draws", info.label_draws},
                        {"note", "caller asserts the input scheme is (k, eps^2/4)-holographic"},
                        {"seed", seed}};
                std::ostringstream os;
                os << "identicalize: r=" << info.r << ", posterior "
                   << (info.exact_posterior ? "exact" : "sampled") << "\n";
                emit_report(make_envelope("report/identicalize", rj), report_path, os.str());
                return 0;
            }
        }

        if (v_holo->parsed()) {
            FuzzyFunction f = load_function(f_path, limits);
            HoloScheme scheme = load_scheme(scheme_path, limits);
            CheckMode mode = mode_name == "mc" ? CheckMode::MonteCarlo : CheckMode::Exact;
            HoloCheckReport rep = holo_check(scheme, f, eps, mode, trials, seed, limits);
            double slack = mode == CheckMode::MonteCarlo
                               ? 3.0 * std::sqrt(std::max(eps * (1 - eps), 2.5e-5) / trials)
                               : 0.0;
            bool pass = rep.worst_failure_rate <= eps + slack + 1e-12;
            json rj = holo_check_report_to_json(rep);
            rj["pass"] = pass;
            rj["slack"] = slack;
            rj["seed"] = seed;
            std::ostringstream os;
            os << (pass ? "PASS" : "FAIL") << " holo check: worst failure " << rep.worst_failure_rate
               << " vs eps " << eps << "\n";
            emit_report(make_envelope("report/holo-check", rj), report_path, os.str());
            return pass ? 0 : 1;
        }
        if (v_sup->parsed()) {
            Evaluator fe = evaluator_from_file(f_path, limits);
            Evaluator ge = evaluator_from_file(g_path, limits);
            int n = dimension_from_file(f_path);
            SupNormResult sup = sup_norm_error(fe, ge, n, limits);
            std::string bits;
            for (Bit b : sup.argmax) bits += b ? '1' : '0';
            json rj{{"max_error", sup.max_error}, {"argmax", bits}, {"seed", seed}};
            emit_report(make_envelope("report/supnorm", rj), report_path,
                        "supnorm: max error " + std::to_string(sup.max_error) + " at x=" + bits + "\n");
            return 0;
        }
        if (v_pipe->parsed()) {
            FuzzyFunction f = load_function(f_path, limits);
            HoloScheme scheme = load_scheme(scheme_path, limits);
            PipelineConfig config;
            config.eps = eps;
            config.seed = seed;
            config.search = parse_search(search_name);
            config.cert_trials = trials;
            config.stage_c_trials = trials;
            config.limits = limits;
            PipelineReport rep = run_pipeline(f, scheme, config);
            emit_report(make_envelope("report/pipeline", pipeline_report_to_json(rep)), report_path,
                        render_pipeline_report(rep));
            return rep.all_pass ? 0 : 1;
        }
        if (v_lemmas->parsed()) {
            LemmaSuiteReport rep = lemma_suite(seed);
            emit_report(make_envelope("report/lemmas", lemma_report_to_json(rep)), report_path,
                        render_lemma_report(rep));
            return rep.all_pass ? 0 : 1;
        }
        if (report_cmd->parsed()) {
            json doc = load_json(in_path);
            std::string schema = envelope_schema(doc);
            json payload = doc.at("payload");
            std::cout << schema << "\n" << payload.dump(2) << "\n";
            if (payload.contains("all_pass")) return payload["all_pass"].get<bool>() ? 0 : 1;
            if (payload.contains("pass")) return payload["pass"].get<bool>() ? 0 : 1;
            return 0;
        }
    } catch (const LimitExceeded& e) {
        std::cerr << "limit exceeded: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
