#include <doctest.h>

#include <cmath>

#include "holofun/sampling.hpp"
#include "test_util.hpp"

using namespace holofun;

namespace {

// Independent bottom-up reconstruction over the plan tree, for cross-checking
// plan_reconstruct and the error recursion.
double oracle_node_value(const PlanNode& node, std::span<const int> locations, std::span<const Bit> bits) {
    double est = node.direct.c;
    if (node.direct.r > 0.0) {
        auto start = static_cast<std::size_t>(node.direct.range_start);
        long long acc = 0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(node.direct.r); ++j) {
            auto it = node.direct.signs.find(locations[start + j]);
            int sign = it == node.direct.signs.end() ? 0 : it->second;
            if (bits[start + j]) acc += sign;
        }
        est += node.direct.scale * static_cast<double>(acc) / node.direct.r;
    }
    for (const auto& [beta, child] : node.children) est += beta * oracle_node_value(child, locations, bits);
    return node.act(est);
}

bool check_error_recursion(const PlanNode& node, std::span<const int> locations, std::span<const Bit> bits,
                           const std::vector<double>& truth, const BitString& x, int K, double tau,
                           bool& all_direct_ok) {
    double gamma = tau / (2.0 * K);
    double direct_est = node.direct.c;
    if (node.direct.r > 0.0) {
        auto start = static_cast<std::size_t>(node.direct.range_start);
        long long acc = 0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(node.direct.r); ++j) {
            auto it = node.direct.signs.find(locations[start + j]);
            if (bits[start + j] && it != node.direct.signs.end()) acc += it->second;
        }
        direct_est += node.direct.scale * static_cast<double>(acc) / node.direct.r;
    }
    if (std::abs(direct_est - affine_truth(node.direct, x)) > gamma) all_direct_ok = false;
    bool ok = true;
    for (const auto& [beta, child] : node.children)
        ok = ok && check_error_recursion(child, locations, bits, truth, x, K, gamma / K, all_direct_ok);
    double est = oracle_node_value(node, locations, bits);
    double err = std::abs(est - truth[static_cast<std::size_t>(node.vertex)]);
    return ok && (err <= tau + 1e-12);
}

}  // namespace

TEST_CASE("plan_affine: zero form, the Hoeffding count, normalization") {
    AffinePlan zero = plan_affine(4, 0.3, {}, 1.0, 0.1, 0.1);
    CHECK(zero.r == 0.0);
    Rng rng = make_rng(1);
    CHECK(run_affine(zero, BitString{1, 1, 1, 1}, rng) == doctest::Approx(0.3));

    CHECK(affine_sample_count(1.0, 0.1, 0.05) == 738.0);

    AffinePlan plan = plan_affine(2, 0.0, {{0, 0.5}, {1, -0.5}}, 1.0, 0.2, 0.2);
    CHECK(plan.scale == doctest::Approx(1.0));
    CHECK(plan.query->weight(0) == doctest::Approx(0.5));
    CHECK(plan.query->weight(1) == doctest::Approx(0.5));
    CHECK(plan.signs.at(0) == 1);
    CHECK(plan.signs.at(1) == -1);

    CHECK_THROWS_AS(plan_affine(2, 0.5, {{0, 0.8}}, 1.0, 0.1, 0.1), InvalidInput);
}

TEST_CASE("run_affine: zero-variance forms are exact") {
    AffinePlan plan = plan_affine(3, 0.25, {{1, 1.0}}, 1.5, 0.3, 0.3);
    Rng rng = make_rng(2);
    CHECK(run_affine(plan, BitString{0, 1, 0}, rng) == doctest::Approx(1.25));
    CHECK(run_affine(plan, BitString{0, 0, 0}, rng) == doctest::Approx(0.25));
}

TEST_CASE("run_affine failure band and unbiasedness") {
    Rng rng = make_rng(3);
    std::map<int, double> w{{0, 0.4}, {1, -0.3}, {2, 0.2}};
    AffinePlan plan = plan_affine(3, 0.05, w, 1.0, 0.15, 0.1);
    BitString x{1, 1, 0};
    double truth = affine_truth(plan, x);
    CHECK(truth == doctest::Approx(0.05 + 0.4 - 0.3));
    int runs = 20000, failures = 0;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < runs; ++t) {
        double est = run_affine(plan, x, rng);
        sum += est;
        sumsq += est * est;
        if (std::abs(est - truth) > 0.15) ++failures;
    }
    double freq = static_cast<double>(failures) / runs;
    CHECK(freq <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / runs));
    double mean = sum / runs;
    double se = std::sqrt(std::max(sumsq / runs - mean * mean, 1e-12) / runs);
    CHECK(std::abs(mean - truth) <= 4.0 * se);
}

TEST_CASE("plan_network: constants, the single-wire plan, parameters") {
    NetworkBuilder b(3);
    NodeRef o = b.add_vertex(0.4, {}, Activation::identity_clip());
    Network net = std::move(b).build(o);
    SamplerPlan plan = plan_network(net, 0.3);
    CHECK(plan.used_r == 0.0);
    CHECK(plan.declared_r >= 1.0);
    Rng rng = make_rng(4);
    CHECK(run_plan(plan, BitString{1, 0, 1}, rng).value == doctest::Approx(0.4));

    NetworkBuilder b2(3);
    std::pair<NodeRef, double> e[] = {{NodeRef::input(0), 1.0}};
    NodeRef o2 = b2.add_vertex(0.0, e, Activation::identity_clip());
    Network wire = std::move(b2).build(o2);
    SamplerPlan wp = plan_network(wire, 0.3);
    CHECK(wp.K == 1);
    CHECK(wp.root.direct.delta == doctest::Approx(0.15));  // gamma = tau / 2K
    CHECK(wp.root.direct.rho == doctest::Approx(0.15));
    CHECK(wp.root.direct.r == affine_sample_count(1.0, 0.15, 0.15));
    // Point query: every estimate is exact.
    CHECK(run_plan(wp, BitString{1, 1, 0}, rng).value == doctest::Approx(1.0));
    CHECK(run_plan(wp, BitString{0, 1, 0}, rng).value == doctest::Approx(0.0));
}

TEST_CASE("plan recursion matches an independent recomputation") {
    // Two-layer network: output reads one input coordinate and one hidden
    // vertex.
    NetworkBuilder b(4);
    std::pair<NodeRef, double> e0[] = {{NodeRef::input(0), 0.5}, {NodeRef::input(1), 0.5}};
    NodeRef hidden = b.add_vertex(0.0, e0, Activation::clipped_square());
    std::pair<NodeRef, double> e1[] = {{NodeRef::input(2), 0.5}, {hidden, 0.5}};
    NodeRef out = b.add_vertex(0.25, e1, Activation::identity_clip());
    Network net = std::move(b).build(out);

    double delta = 0.35;
    SamplerPlan plan = plan_network(net, delta);
    int K = plan.K;
    double gamma = delta / (2.0 * K);
    double expect = affine_sample_count(K, gamma, delta / 2.0) +
                    affine_sample_count(K, (gamma / K) / (2.0 * K), delta / (4.0 * K));
    CHECK(plan.used_r == doctest::Approx(expect));
    CHECK(plan.root.children.size() == 1);

    // Layout length is a function of (K, delta) only: two structurally
    // different networks with equal audited K share the declared length.
    NetworkBuilder ba(6);
    std::pair<NodeRef, double> ea[] = {{NodeRef::input(5), 1.0}};
    NodeRef oa = ba.add_vertex(0.3, ea, Activation::identity_clip());
    Network net_a = std::move(ba).build(oa);
    NetworkBuilder bb(6);
    std::pair<NodeRef, double> eb0[] = {{NodeRef::input(0), 0.5}};
    NodeRef h0 = bb.add_vertex(0.0, eb0, Activation::identity_clip());
    std::pair<NodeRef, double> eb1[] = {{NodeRef::input(1), 0.5}, {h0, 0.5}};
    NodeRef ob = bb.add_vertex(0.0, eb1, Activation::identity_clip());
    Network net_b = std::move(bb).build(ob);
    REQUIRE(audit_complexity(net_a).K == audit_complexity(net_b).K);
    SamplerPlan pa = plan_network(net_a, 0.3);
    SamplerPlan pb = plan_network(net_b, 0.3);
    CHECK(pa.used_r != pb.used_r);
    CHECK(pa.declared_r == pb.declared_r);
    CHECK(pa.declared_r == closed_form_sample_bound(audit_complexity(net_a).K, 0.3));
}

TEST_CASE("plan_reconstruct is deterministic and matches the oracle walk") {
    NetworkBuilder b(4);
    std::pair<NodeRef, double> e0[] = {{NodeRef::input(0), 0.4}, {NodeRef::input(3), -0.3}};
    NodeRef hidden = b.add_vertex(0.2, e0, Activation::identity_clip());
    std::pair<NodeRef, double> e1[] = {{NodeRef::input(1), 0.3}, {hidden, 0.6}};
    NodeRef out = b.add_vertex(0.1, e1, Activation::identity_clip());
    Network net = std::move(b).build(out);
    SamplerPlan plan = plan_network(net, 0.45);

    Rng rng = make_rng(5);
    BitString x{1, 0, 1, 1};
    for (int trial = 0; trial < 10; ++trial) {
        PlanRunResult run = run_plan(plan, x, rng);
        BitString bits(run.locations.size());
        for (std::size_t j = 0; j < run.locations.size(); ++j)
            bits[j] = x[static_cast<std::size_t>(run.locations[j])];
        CHECK(plan_reconstruct(plan, run.locations, bits) == doctest::Approx(run.value).epsilon(1e-12));
        CHECK(clip01(oracle_node_value(plan.root, run.locations, bits)) ==
              doctest::Approx(run.value).epsilon(1e-12));
    }
}

TEST_CASE("error recursion: node errors within tau when direct estimates succeed") {
    NetworkBuilder b(5);
    std::pair<NodeRef, double> e0[] = {{NodeRef::input(0), 0.5}, {NodeRef::input(1), 0.4}};
    NodeRef hidden = b.add_vertex(0.05, e0, Activation::identity_clip());
    std::pair<NodeRef, double> e1[] = {{NodeRef::input(2), 0.4}, {hidden, 0.5}};
    NodeRef out = b.add_vertex(0.05, e1, Activation::identity_clip());
    Network net = std::move(b).build(out);
    SamplerPlan plan = plan_network(net, 0.4);

    Rng rng = make_rng(6);
    int checked = 0;
    for (std::uint64_t xi = 0; xi < 32; ++xi) {
        BitString x = bits_from_index(xi, 5);
        std::vector<double> truth = net.forward_trace(x);
        for (int trial = 0; trial < 8; ++trial) {
            PlanRunResult run = run_plan(plan, x, rng);
            BitString bits(run.locations.size());
            for (std::size_t j = 0; j < run.locations.size(); ++j)
                bits[j] = x[static_cast<std::size_t>(run.locations[j])];
            bool all_direct_ok = true;
            bool chain = check_error_recursion(plan.root, run.locations, bits, truth, x, plan.K, plan.delta,
                                               all_direct_ok);
            if (all_direct_ok) {
                CHECK(chain);
                ++checked;
            }
        }
    }
    CHECK(checked > 100);  // the success event is the common case
}

TEST_CASE("plan simulator matches the literal sampler in distribution") {
    NetworkBuilder b(4);
    std::pair<NodeRef, double> e[] = {{NodeRef::input(0), 0.45}, {NodeRef::input(1), -0.35},
                                      {NodeRef::input(3), 0.2}};
    NodeRef o = b.add_vertex(0.3, e, Activation::clipped_square());
    Network net = std::move(b).build(o);
    SamplerPlan plan = plan_network(net, 0.35);
    BitString x{1, 1, 0, 1};
    PlanSimulator sim(plan, x);
    Rng rng = make_rng(7);
    const int trials = 4000;
    double ls = 0, ss = 0, lq = 0, sq = 0;
    int l_fail = 0, s_fail = 0;
    double truth = net.forward(x);
    for (int t = 0; t < trials; ++t) {
        double lv = run_plan(plan, x, rng).value;
        double sv = sim.draw(rng);
        ls += lv;
        ss += sv;
        lq += lv * lv;
        sq += sv * sv;
        if (std::abs(lv - truth) > plan.delta) ++l_fail;
        if (std::abs(sv - truth) > plan.delta) ++s_fail;
    }
    double lm = ls / trials, sm = ss / trials;
    double lv = std::max(lq / trials - lm * lm, 0.0), sv = std::max(sq / trials - sm * sm, 0.0);
    double se = std::sqrt((lv + sv) / trials + 1e-12);
    CHECK(std::abs(lm - sm) <= 4.0 * se + 1e-9);
    CHECK(std::abs(l_fail - s_fail) <= 4.0 * std::sqrt(static_cast<double>(l_fail + s_fail) + 9.0));
    CHECK(static_cast<double>(l_fail) / trials <= plan.delta);
    CHECK(static_cast<double>(s_fail) / trials <= plan.delta);
}

TEST_CASE("plan simulator handles the Poisson and normal count regimes") {
    // Hand-built plan with astronomically many samples: the estimate must
    // concentrate on the truth.
    AffinePlan direct;
    direct.c = 0.1;
    direct.scale = 0.6;
    std::vector<double> w{0.5, 0.0, 0.5};
    direct.query = CoordinateMeasure::from_weights(std::move(w));
    direct.signs = {{0, 1}, {2, -1}};
    direct.r = 1e18;
    direct.b_bound = 1.0;
    direct.delta = 1e-8;
    direct.rho = 0.01;
    SamplerPlan plan;
    plan.n = 3;
    plan.K = 1;
    plan.delta = 0.25;
    plan.root = PlanNode{0, Activation::identity_clip(), direct, {}};
    plan.used_r = direct.r;
    plan.declared_r = direct.r;
    plan.padding = CoordinateMeasure::uniform(3);

    BitString x{1, 0, 1};  // truth: 0.1 + 0.6 * (0.5 - 0.5) = 0.1
    PlanSimulator sim(plan, x);
    Rng rng = make_rng(8);
    for (int t = 0; t < 200; ++t) CHECK(std::abs(sim.draw(rng) - 0.1) <= 1e-6);

    BitString x2{1, 0, 0};  // truth: 0.1 + 0.6 * 0.5 = 0.4
    PlanSimulator sim2(plan, x2);
    for (int t = 0; t < 200; ++t) CHECK(std::abs(sim2.draw(rng) - 0.4) <= 1e-6);
}

TEST_CASE("nn_to_holo exactness for constants and wires") {
    NetworkBuilder b(3);
    NodeRef o = b.add_vertex(0.55, {}, Activation::identity_clip());
    Network net = std::move(b).build(o);
    HoloScheme scheme = nn_to_holo(net, 0.3);
    auto f = FuzzyFunction::table(3, std::vector<double>(8, 0.55));
    Rng rng = make_rng(9);
    for (std::uint64_t xi = 0; xi < 8; ++xi) {
        BitString x = bits_from_index(xi, 3);
        CHECK(failure_probability_mc(scheme, f, x, 0.0, 50, rng) == 0.0);
    }

    NetworkBuilder b2(3);
    std::pair<NodeRef, double> e[] = {{NodeRef::input(0), 1.0}};
    NodeRef o2 = b2.add_vertex(0.0, e, Activation::identity_clip());
    Network wire = std::move(b2).build(o2);
    HoloScheme ws = nn_to_holo(wire, 0.3);
    auto fw = FuzzyFunction::junta(3, {0}, {0.0, 1.0});
    for (std::uint64_t xi = 0; xi < 8; ++xi) {
        BitString x = bits_from_index(xi, 3);
        CHECK(failure_probability_mc(ws, fw, x, 0.0, 50, rng) == 0.0);
    }
}

TEST_CASE("nn_to_holo accepts declared-Lipschitz piecewise-linear activations") {
    auto bump = Activation::piecewise_linear({{0.0, 0.1}, {0.5, 0.9}, {1.0, 0.3}}, 2.0);
    NetworkBuilder b(4);
    std::pair<NodeRef, double> e[] = {{NodeRef::input(0), 0.5}, {NodeRef::input(2), 0.4}};
    NodeRef o = b.add_vertex(0.05, e, bump);
    Network net = std::move(b).build(o);
    double eps = 0.3;
    HoloScheme scheme = nn_to_holo(net, eps);
    std::vector<double> table(16);
    for (std::uint64_t xi = 0; xi < 16; ++xi) table[xi] = net.forward(bits_from_index(xi, 4));
    auto f = FuzzyFunction::table(4, std::move(table));
    auto report = holo_check(scheme, f, 3.0 * eps, CheckMode::MonteCarlo, 1000, 23);
    CHECK(report.worst_failure_rate <= 3.0 * eps + 3.0 * std::sqrt(3.0 * eps * (1 - 3.0 * eps) / 1000));
}

TEST_CASE("nn_to_holo failure sweep on a small compiled network") {
    PolyRep rep;
    rep.n = 5;
    rep.forms.push_back(LinearForm{{{0, 0.4}, {2, 0.3}, {4, -0.2}}});
    rep.poly.m = 1;
    rep.poly.add_term({1}, 0.7);
    rep.poly.add_term({0}, 0.15);
    Network net = compile_poly_to_nn(rep, poly_complexity(rep).K);
    double eps = 0.3;
    HoloScheme scheme = nn_to_holo(net, eps);
    std::vector<double> table(32);
    for (std::uint64_t xi = 0; xi < 32; ++xi) table[xi] = net.forward(bits_from_index(xi, 5));
    auto f = FuzzyFunction::table(5, std::move(table));
    auto report = holo_check(scheme, f, 3.0 * eps, CheckMode::MonteCarlo, 2000, 17);
    double slack = 3.0 * std::sqrt(3.0 * eps * (1 - 3.0 * eps) / 2000);
    CHECK(report.worst_failure_rate <= 3.0 * eps + slack);
}
