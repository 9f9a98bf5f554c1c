#include "holofun/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "holofun/errors.hpp"

namespace holofun {

namespace {

std::string coord_key(int i) { return std::to_string(i + 1); }  // 1-based on disk

int parse_coord(const std::string& key, int n) {
    int v;
    try {
        v = std::stoi(key);
    } catch (...) {
        throw InvalidInput("expected a 1-based coordinate index, got '" + key + "'");
    }
    if (v < 1 || v > n) throw InvalidInput("coordinate index " + key + " out of range 1.." + std::to_string(n));
    return v - 1;
}

std::vector<int> parse_tuple(const std::string& key, int n) {
    std::vector<int> out;
    std::stringstream ss(key);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_coord(item, n));
    return out;
}

std::string tuple_key(const std::vector<int>& s) {
    std::string key;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) key += ',';
        key += coord_key(s[i]);
    }
    return key;
}

json sparse_coeffs_to_json(const std::map<int, double>& coeffs) {
    json j = json::object();
    for (const auto& [i, w] : coeffs) j[coord_key(i)] = w;
    return j;
}

std::map<int, double> sparse_coeffs_from_json(const json& j, int n) {
    std::map<int, double> out;
    for (const auto& [key, value] : j.items()) out[parse_coord(key, n)] = value.get<double>();
    return out;
}

}  // namespace

json make_envelope(const std::string& schema, json payload) {
    return json{{"schema", schema}, {"version", 1}, {"payload", std::move(payload)}};
}

std::string envelope_schema(const json& doc) {
    if (!doc.is_object() || !doc.contains("schema")) throw InvalidInput("missing envelope schema field");
    return doc.at("schema").get<std::string>();
}

json open_envelope(const json& doc, const std::string& expected_schema) {
    if (envelope_schema(doc) != expected_schema)
        throw InvalidInput("expected schema '" + expected_schema + "', found '" + envelope_schema(doc) + "'");
    if (doc.at("version").get<int>() != 1) throw InvalidInput("unsupported envelope version");
    if (!doc.contains("payload")) throw InvalidInput("missing envelope payload");
    return doc.at("payload");
}

json measure_to_json(const CoordinateMeasure& m) {
    return json{{"n", m.n()}, {"weights", m.weights()}};
}

CoordinateMeasure measure_from_json(const json& j) {
    int n = j.at("n").get<int>();
    auto weights = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(weights.size()) != n) throw InvalidInput("measure: weights length must equal n");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidInput("measure: weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInput("measure: weights must sum to 1 within 1e-9 (got " + std::to_string(sum) + ")");
    return CoordinateMeasure::from_weights(std::move(weights));
}

json activation_to_json(const Activation& a) {
    json j{{"kind", a.name()}};
    if (a.kind() == ActKind::PiecewiseLinear) {
        json pts = json::array();
        for (const auto& [x, y] : a.points()) pts.push_back(json::array({x, y}));
        j["points"] = std::move(pts);
        j["lip"] = a.lipschitz();
    }
    return j;
}

Activation activation_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity-clip") return Activation::identity_clip();
    if (kind == "clipped-square") return Activation::clipped_square();
    if (kind == "piecewise-linear") {
        std::vector<std::pair<double, double>> points;
        for (const auto& p : j.at("points")) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return Activation::piecewise_linear(std::move(points), j.at("lip").get<double>());
    }
    throw InvalidInput("unknown activation kind '" + kind + "'");
}

json function_payload(const FuzzyFunction& f) {
    json j{{"n", f.n()}};
    struct Visitor {
        json& j;
        void operator()(const TableBody& b) const {
            j["kind"] = "table";
            j["table"] = b.values;
        }
        void operator()(const WeightedAverageBody& b) const {
            j["kind"] = "weighted-average";
            j["weights"] = b.mu.weights();
            j["activation"] = activation_to_json(b.sigma);
        }
        void operator()(const JuntaBody& b) const {
            j["kind"] = "junta";
            json coords = json::array();
            for (int c : b.coords) coords.push_back(c + 1);
            j["coords"] = std::move(coords);
            j["table"] = b.table;
        }
        void operator()(const ParityBody&) const { j["kind"] = "parity"; }
    };
    std::visit(Visitor{j}, f.body());
    return j;
}

FuzzyFunction function_from_payload(const json& j, const Limits& limits) {
    std::string kind = j.at("kind").get<std::string>();
    int n = j.at("n").get<int>();
    if (kind == "table") return FuzzyFunction::table(n, j.at("table").get<std::vector<double>>(), limits);
    if (kind == "weighted-average") {
        auto mu = measure_from_json(json{{"n", n}, {"weights", j.at("weights")}});
        return FuzzyFunction::weighted_average(std::move(mu), activation_from_json(j.at("activation")));
    }
    if (kind == "junta") {
        std::vector<int> coords;
        for (const auto& c : j.at("coords")) {
            int v = c.get<int>();
            if (v < 1 || v > n) throw InvalidInput("junta coordinate out of range 1..n");
            coords.push_back(v - 1);
        }
        return FuzzyFunction::junta(n, std::move(coords), j.at("table").get<std::vector<double>>());
    }
    if (kind == "parity") return FuzzyFunction::parity(n);
    throw InvalidInput("unknown function kind '" + kind + "'");
}

namespace {

json runs_to_json(std::span<const MeasureRun> runs) {
    json arr = json::array();
    for (const auto& run : runs)
        arr.push_back(json{{"weights", run.measure.weights()}, {"count", run.count}});
    return arr;
}

std::vector<MeasureRun> runs_from_json(const json& arr, int n) {
    std::vector<MeasureRun> runs;
    for (const auto& item : arr) {
        auto m = measure_from_json(json{{"n", n}, {"weights", item.at("weights")}});
        runs.push_back(MeasureRun{std::move(m), item.at("count").get<double>()});
    }
    return runs;
}

}  // namespace

json scheme_payload(const HoloScheme& s) {
    json j{{"n", s.n()}, {"k", s.k()}, {"measures", runs_to_json(s.measure_runs())}};
    struct Visitor {
        json& j;
        void operator()(const ExplicitTests& t) const {
            json entries = json::object();
            for (const auto& [tuple, table] : t.entries) entries[tuple_key(tuple)] = table;
            j["tests"] = json{{"kind", "explicit"}, {"entries", std::move(entries)}};
        }
        void operator()(const MeanTest& t) const {
            j["tests"] = json{{"kind", "mean"}, {"activation", activation_to_json(t.sigma)}};
        }
        void operator()(const PlanTest& t) const {
            j["tests"] = json{{"kind", "plan"}, {"plan", plan_payload(*t.plan)}};
        }
        void operator()(const PosteriorTests& t) const {
            j["tests"] = json{{"kind", "posterior"},
                              {"base", scheme_payload(*t.base)},
                              {"eps", t.eps},
                              {"exact", t.exact},
                              {"label_draws", t.label_draws},
                              {"seed", t.seed}};
        }
    };
    std::visit(Visitor{j}, s.tests());
    return j;
}

HoloScheme scheme_from_payload(const json& j, const Limits& limits) {
    int n = j.at("n").get<int>();
    double k = j.at("k").get<double>();
    auto runs = runs_from_json(j.at("measures"), n);
    const json& tj = j.at("tests");
    std::string kind = tj.at("kind").get<std::string>();
    if (kind == "explicit") {
        ExplicitTests tests;
        for (const auto& [key, table] : tj.at("entries").items())
            tests.entries.emplace(parse_tuple(key, n), table.get<std::vector<double>>());
        return HoloScheme(n, k, std::move(runs), std::move(tests));
    }
    if (kind == "mean")
        return HoloScheme(n, k, std::move(runs), MeanTest{activation_from_json(tj.at("activation"))});
    if (kind == "plan") {
        auto plan = std::make_shared<const SamplerPlan>(plan_from_payload(tj.at("plan")));
        return HoloScheme(n, k, std::move(runs), PlanTest{std::move(plan)});
    }
    if (kind == "posterior") {
        PosteriorTests tests;
        tests.base = std::make_shared<const HoloScheme>(scheme_from_payload(tj.at("base"), limits));
        tests.eps = tj.at("eps").get<double>();
        tests.exact = tj.at("exact").get<bool>();
        tests.label_draws = tj.at("label_draws").get<int>();
        tests.seed = tj.at("seed").get<std::uint64_t>();
        return HoloScheme(n, k, std::move(runs), std::move(tests));
    }
    throw InvalidInput("unknown test kind '" + kind + "'");
}

json polyrep_payload(const PolyRep& rep) {
    json forms = json::array();
    for (const auto& f : rep.forms) forms.push_back(sparse_coeffs_to_json(f.coeffs));
    json poly = json::array();
    for (const auto& [exps, coef] : rep.poly.terms) poly.push_back(json{{"exps", exps}, {"coef", coef}});
    return json{{"n", rep.n}, {"m", rep.m()}, {"forms", std::move(forms)}, {"poly", std::move(poly)}};
}

PolyRep polyrep_from_payload(const json& j) {
    PolyRep rep;
    rep.n = j.at("n").get<int>();
    int m = j.at("m").get<int>();
    for (const auto& f : j.at("forms")) rep.forms.push_back(LinearForm{sparse_coeffs_from_json(f, rep.n)});
    if (static_cast<int>(rep.forms.size()) != m) throw InvalidInput("poly-rep: m does not match forms");
    rep.poly.m = m;
    for (const auto& term : j.at("poly")) {
        auto exps = term.at("exps").get<std::vector<int>>();
        if (static_cast<int>(exps.size()) != m) throw InvalidInput("poly-rep: exponent vector length");
        for (int e : exps)
            if (e < 0) throw InvalidInput("poly-rep: negative exponent");
        rep.poly.add_term(exps, term.at("coef").get<double>());
    }
    return rep;
}

json network_payload(const Network& net) {
    json vertices = json::array();
    for (const auto& v : net.vertices()) {
        json hid = json::object();
        for (const auto& [u, w] : v.hid_edges) hid[std::to_string(u)] = w;
        vertices.push_back(json{{"bias", v.bias},
                                {"in_edges", sparse_coeffs_to_json(v.in_edges)},
                                {"hid_edges", std::move(hid)},
                                {"act", activation_to_json(v.act)}});
    }
    return json{{"n", net.n()}, {"vertices", std::move(vertices)}, {"output", net.output()}};
}

Network network_from_payload(const json& j) {
    int n = j.at("n").get<int>();
    std::vector<Vertex> vertices;
    for (const auto& vj : j.at("vertices")) {
        Vertex v;
        v.bias = vj.at("bias").get<double>();
        v.in_edges = sparse_coeffs_from_json(vj.at("in_edges"), n);
        for (const auto& [key, w] : vj.at("hid_edges").items()) v.hid_edges[std::stoi(key)] = w.get<double>();
        v.act = activation_from_json(vj.at("act"));
        vertices.push_back(std::move(v));
    }
    // The Network constructor validates topological order on load.
    return Network(n, std::move(vertices), j.at("output").get<int>());
}

namespace {

json affine_plan_to_json(const AffinePlan& p) {
    json coeffs = json::object();
    for (const auto& [i, sign] : p.signs) coeffs[coord_key(i)] = sign * p.scale * p.query->weight(i);
    return json{{"c", p.c},       {"coeffs", std::move(coeffs)}, {"B", p.b_bound},
                {"delta", p.delta}, {"rho", p.rho},              {"r", p.r},
                {"range_start", p.range_start}};
}

AffinePlan affine_plan_from_json(const json& j, int n) {
    auto w = sparse_coeffs_from_json(j.at("coeffs"), n);
    AffinePlan p = plan_affine(n, j.at("c").get<double>(), w, j.at("B").get<double>(),
                               j.at("delta").get<double>(), j.at("rho").get<double>());
    if (std::abs(p.r - j.at("r").get<double>()) > 0.5)
        throw InvalidInput("sampler-plan: stored sample count does not match the (B, delta, rho) formula");
    p.range_start = j.at("range_start").get<double>();
    return p;
}

json plan_node_to_json(const PlanNode& node) {
    json children = json::array();
    for (const auto& [beta, child] : node.children)
        children.push_back(json{{"beta", beta}, {"node", plan_node_to_json(child)}});
    return json{{"vertex", node.vertex},
                {"act", activation_to_json(node.act)},
                {"direct", affine_plan_to_json(node.direct)},
                {"children", std::move(children)}};
}

PlanNode plan_node_from_json(const json& j, int n) {
    PlanNode node;
    node.vertex = j.at("vertex").get<int>();
    node.act = activation_from_json(j.at("act"));
    node.direct = affine_plan_from_json(j.at("direct"), n);
    for (const auto& cj : j.at("children"))
        node.children.emplace_back(cj.at("beta").get<double>(), plan_node_from_json(cj.at("node"), n));
    return node;
}

void rebuild_layout(const PlanNode& node, std::vector<MeasureRun>& layout) {
    if (node.direct.r > 0.0) layout.push_back(MeasureRun{*node.direct.query, node.direct.r});
    for (const auto& [beta, child] : node.children) rebuild_layout(child, layout);
}

}  // namespace

json plan_payload(const SamplerPlan& plan) {
    return json{{"n", plan.n},
                {"K", plan.K},
                {"delta", plan.delta},
                {"used_r", plan.used_r},
                {"declared_r", plan.declared_r},
                {"tree", plan_node_to_json(plan.root)}};
}

SamplerPlan plan_from_payload(const json& j) {
    SamplerPlan plan;
    plan.n = j.at("n").get<int>();
    plan.K = j.at("K").get<int>();
    plan.delta = j.at("delta").get<double>();
    plan.used_r = j.at("used_r").get<double>();
    plan.declared_r = j.at("declared_r").get<double>();
    plan.root = plan_node_from_json(j.at("tree"), plan.n);
    plan.padding = CoordinateMeasure::uniform(plan.n);
    plan.layout.clear();
    rebuild_layout(plan.root, plan.layout);
    if (plan.declared_r > plan.used_r)
        plan.layout.push_back(MeasureRun{*plan.padding, plan.declared_r - plan.used_r});
    return plan;
}

json partition_to_json(const Partition& p) {
    return json{{"n", p.n}, {"m", p.m}, {"labels", p.labels}};
}

json step_array_to_json(const StepArray& w) {
    // W flat in row-major [m]^k order, u[0] slowest.
    return json{{"m", w.m}, {"k", w.k}, {"W", w.w}};
}

json trace_to_json(const RegularityTrace& trace) {
    json steps = json::array();
    for (const auto& step : trace.steps) {
        json box = json::array();
        for (const auto& mask : step.box) {
            json coords = json::array();
            for (std::size_t i = 0; i < mask.size(); ++i)
                if (mask[i]) coords.push_back(static_cast<int>(i) + 1);
            box.push_back(std::move(coords));
        }
        steps.push_back(json{{"array_index", step.array_index},
                             {"box", std::move(box)},
                             {"energy_before", step.energy_before},
                             {"energy_after", step.energy_after}});
    }
    return json{{"steps", std::move(steps)}, {"final_energy", trace.final_energy}};
}

json holo_check_report_to_json(const HoloCheckReport& r) {
    std::string bits;
    for (Bit b : r.worst_input) bits += b ? '1' : '0';
    return json{{"eps_target", r.eps_target},
                {"worst_failure_rate", r.worst_failure_rate},
                {"worst_input", bits},
                {"mode", r.mode == CheckMode::Exact ? "exact" : "monte-carlo"},
                {"trials", r.trials}};
}

json pipeline_report_to_json(const PipelineReport& r) {
    json stages = json::array();
    for (const auto& s : r.stages)
        stages.push_back(json{{"name", s.name},
                              {"target", s.target},
                              {"measured", s.measured},
                              {"slack", s.slack},
                              {"pass", s.pass},
                              {"mode", s.mode},
                              {"realized_complexity", s.realized_complexity}});
    return json{{"eps", r.eps},
                {"seed", r.seed},
                {"certification",
                 json{{"failure", r.cert_failure},
                      {"slack", r.cert_slack},
                      {"ok", r.cert_ok},
                      {"mode", r.cert_mode},
                      {"proceeded_uncertified", r.proceeded_uncertified}}},
                {"stages", std::move(stages)},
                {"all_pass", r.all_pass}};
}

json lemma_report_to_json(const LemmaSuiteReport& r) {
    json results = json::array();
    for (const auto& l : r.results)
        results.push_back(json{{"name", l.name}, {"pass", l.pass}, {"detail", l.detail}});
    return json{{"seed", r.seed}, {"results", std::move(results)}, {"all_pass", r.all_pass}};
}

json load_json(const std::filesystem::path& path) {
    // "-" streams from stdin.
    if (path == "-") {
        json doc;
        std::cin >> doc;
        return doc;
    }
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    json doc;
    in >> doc;
    return doc;
}

void save_json(const std::filesystem::path& path, const json& doc) {
    if (path == "-") {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

FuzzyFunction load_function(const std::filesystem::path& path, const Limits& limits) {
    return function_from_payload(open_envelope(load_json(path), kFunctionSchema), limits);
}

HoloScheme load_scheme(const std::filesystem::path& path, const Limits& limits) {
    return scheme_from_payload(open_envelope(load_json(path), kSchemeSchema), limits);
}

PolyRep load_polyrep(const std::filesystem::path& path) {
    return polyrep_from_payload(open_envelope(load_json(path), kPolySchema));
}

Network load_network(const std::filesystem::path& path) {
    return network_from_payload(open_envelope(load_json(path), kNetworkSchema));
}

void save_function(const std::filesystem::path& path, const FuzzyFunction& f) {
    save_json(path, make_envelope(kFunctionSchema, function_payload(f)));
}

void save_scheme(const std::filesystem::path& path, const HoloScheme& s) {
    save_json(path, make_envelope(kSchemeSchema, scheme_payload(s)));
}

void save_polyrep(const std::filesystem::path& path, const PolyRep& rep) {
    save_json(path, make_envelope(kPolySchema, polyrep_payload(rep)));
}

void save_network(const std::filesystem::path& path, const Network& net) {
    save_json(path, make_envelope(kNetworkSchema, network_payload(net)));
}

}  // namespace holofun
