#include <doctest.h>

#include "holofun/serialize.hpp"
#include "test_util.hpp"

using namespace holofun;

TEST_CASE("envelope validation") {
    json doc = make_envelope("fuzzy-function", json{{"kind", "parity"}, {"n", 3}});
    CHECK(envelope_schema(doc) == "fuzzy-function");
    CHECK_THROWS_AS(open_envelope(doc, "network"), InvalidInput);
    json bad = doc;
    bad["version"] = 2;
    CHECK_THROWS_AS(open_envelope(bad, "fuzzy-function"), InvalidInput);
}

TEST_CASE("function round trips evaluate bit-exactly") {
    Rng rng = make_rng(41);
    std::vector<FuzzyFunction> fs;
    fs.push_back(FuzzyFunction::table(5, testutil::random_table(32, rng)));
    fs.push_back(FuzzyFunction::weighted_average(testutil::random_measure(6, rng),
                                                 Activation::identity_clip()));
    fs.push_back(FuzzyFunction::junta(7, {1, 4}, testutil::random_table(4, rng)));
    fs.push_back(FuzzyFunction::parity(4));
    fs.push_back(FuzzyFunction::weighted_average(
        testutil::random_measure(4, rng),
        Activation::piecewise_linear({{0.0, 0.0}, {0.4, 0.9}, {1.0, 0.5}}, 2.5)));
    for (const auto& f : fs) {
        FuzzyFunction g = function_from_payload(function_payload(f));
        REQUIRE(g.n() == f.n());
        for (std::uint64_t xi = 0; xi < (std::uint64_t{1} << f.n()); ++xi) {
            BitString x = bits_from_index(xi, f.n());
            CHECK(f(x) == g(x));
        }
    }
}

TEST_CASE("junta coordinates are 1-based on disk") {
    auto f = FuzzyFunction::junta(6, {1, 4}, {0.0, 0.25, 0.5, 1.0});
    json payload = function_payload(f);
    CHECK(payload["coords"] == json::array({2, 5}));
}

TEST_CASE("measure ingestion enforces the sum tolerance") {
    CHECK_THROWS_AS(measure_from_json(json{{"n", 2}, {"weights", {0.5, 0.6}}}), InvalidInput);
    auto m = measure_from_json(json{{"n", 2}, {"weights", {0.5, 0.5}}});
    CHECK(m.weight(1) == 0.5);
}

TEST_CASE("scheme round trips: explicit, mean, posterior") {
    Rng rng = make_rng(42);
    std::vector<HoloScheme> schemes;
    schemes.push_back(testutil::random_explicit_scheme(4, 2, rng));
    schemes.push_back(build_example1_scheme(testutil::random_measure(5, rng),
                                            Activation::identity_clip(), 0.4));
    auto junta = FuzzyFunction::junta(5, {0, 2}, testutil::random_table(4, rng));
    schemes.push_back(identicalize(build_junta_scheme(junta), 0.5, 3).first);
    for (const auto& s : schemes) {
        HoloScheme t = scheme_from_payload(scheme_payload(s));
        REQUIRE(t.k() == s.k());
        int n = s.n();
        for (std::uint64_t xi = 0; xi < (std::uint64_t{1} << n); ++xi) {
            BitString x = bits_from_index(xi, n);
            bool over_budget = false;
            double a = 0.0, b = 0.0;
            try {
                a = averaged_test(s, x);
            } catch (const LimitExceeded&) {
                over_budget = true;
            }
            if (!over_budget) {
                b = averaged_test(t, x);
                CHECK(a == b);
            }
        }
    }
}

TEST_CASE("explicit test keys are serialized as 1-based tuples") {
    auto junta = FuzzyFunction::junta(6, {1, 4}, {0.1, 0.2, 0.3, 0.4});
    json payload = scheme_payload(build_junta_scheme(junta));
    CHECK(payload["tests"]["entries"].contains("2,5"));
}

TEST_CASE("poly-rep and network round trips evaluate bit-exactly") {
    Rng rng = make_rng(43);
    for (int inst = 0; inst < 5; ++inst) {
        PolyRep rep = testutil::random_small_rep(rng);
        PolyRep back = polyrep_from_payload(polyrep_payload(rep));
        Network net = compile_poly_to_nn(rep, poly_complexity(rep).K);
        Network net_back = network_from_payload(network_payload(net));
        for (std::uint64_t xi = 0; xi < (std::uint64_t{1} << rep.n); ++xi) {
            BitString x = bits_from_index(xi, rep.n);
            CHECK(eval_poly(rep, x) == eval_poly(back, x));
            CHECK(net.forward(x) == net_back.forward(x));
        }
    }
}

TEST_CASE("sampler plans round trip through JSON") {
    NetworkBuilder b(4);
    std::pair<NodeRef, double> e0[] = {{NodeRef::input(0), 0.4}, {NodeRef::input(2), -0.3}};
    NodeRef h = b.add_vertex(0.1, e0, Activation::identity_clip());
    std::pair<NodeRef, double> e1[] = {{NodeRef::input(3), 0.25}, {h, 0.5}};
    NodeRef o = b.add_vertex(0.2, e1, Activation::clipped_square());
    Network net = std::move(b).build(o);
    SamplerPlan plan = plan_network(net, 0.4);
    SamplerPlan back = plan_from_payload(plan_payload(plan));
    CHECK(back.declared_r == plan.declared_r);
    CHECK(back.used_r == plan.used_r);

    // Identical reconstructions on a shared draw.
    BitString x{1, 0, 1, 1};
    Rng rng = make_rng(44);
    PlanRunResult run = run_plan(plan, x, rng);
    BitString bits(run.locations.size());
    for (std::size_t j = 0; j < run.locations.size(); ++j)
        bits[j] = x[static_cast<std::size_t>(run.locations[j])];
    CHECK(plan_reconstruct(back, run.locations, bits) == run.value);

    // Scheme-level round trip via the plan test provider.
    HoloScheme scheme = nn_to_holo(net, 0.4);
    HoloScheme scheme_back = scheme_from_payload(scheme_payload(scheme));
    CHECK(scheme_back.k() == scheme.k());
    auto f = FuzzyFunction::table(4, std::vector<double>(16, 0.5));
    Rng r1 = make_rng(7), r2 = make_rng(7);
    CHECK(failure_probability_mc(scheme, f, x, 0.2, 200, r1) ==
          failure_probability_mc(scheme_back, f, x, 0.2, 200, r2));
}

TEST_CASE("identicalized schemes keep run structure through serialization") {
    Rng rng = make_rng(45);
    auto junta = FuzzyFunction::junta(6, {2, 5}, testutil::random_table(4, rng));
    auto [ident, info] = identicalize(build_junta_scheme(junta), 0.5, 11);
    json payload = scheme_payload(ident);
    REQUIRE(payload["measures"].size() == 1);
    CHECK(payload["measures"][0]["count"] == 6.0);
    HoloScheme back = scheme_from_payload(payload);
    // Identical measures across all positions, bit-exact.
    for (int j = 0; j < 6; ++j) CHECK(back.measure(j).weights() == ident.measure(j).weights());
}
