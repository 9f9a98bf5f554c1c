#include <doctest.h>

#include <cmath>

#include "holofun/network.hpp"
#include "test_util.hpp"

using namespace holofun;

namespace {

// Network whose two bias vertices feed one multiplication module.
Network product_net(double u, double v) {
    NetworkBuilder b(1);
    NodeRef uu = b.add_vertex(u, {}, Activation::identity_clip());
    NodeRef vv = b.add_vertex(v, {}, Activation::identity_clip());
    NodeRef out = b.add_mult_module(uu, vv);
    return std::move(b).build(out);
}

}  // namespace

TEST_CASE("forward: bias vertex, wire vertex") {
    NetworkBuilder b1(2);
    NodeRef o1 = b1.add_vertex(0.5, {}, Activation::identity_clip());
    Network n1 = std::move(b1).build(o1);
    CHECK(n1.forward(BitString{0, 1}) == doctest::Approx(0.5));

    NetworkBuilder b2(2);
    std::pair<NodeRef, double> e[] = {{NodeRef::input(0), 1.0}};
    NodeRef o2 = b2.add_vertex(0.0, e, Activation::identity_clip());
    Network n2 = std::move(b2).build(o2);
    CHECK(n2.forward(BitString{1, 0}) == doctest::Approx(1.0));
    CHECK(n2.forward(BitString{0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("multiplication module is exact on the grid") {
    CHECK(product_net(0.3, 0.7).forward(BitString{0}) == doctest::Approx(0.21).epsilon(1e-13));
    CHECK(product_net(1.0, 1.0).forward(BitString{0}) == doctest::Approx(1.0));
    CHECK(product_net(0.0, 0.83).forward(BitString{0}) == doctest::Approx(0.0));
    for (int iu = 0; iu <= 10; ++iu)
        for (int iv = 0; iv <= 10; ++iv) {
            double u = iu / 10.0, v = iv / 10.0;
            CHECK(std::abs(product_net(u, v).forward(BitString{0}) - u * v) <= 1e-12);
        }
}

TEST_CASE("audit_complexity: single vertex and the module constants") {
    NetworkBuilder b(1);
    NodeRef o = b.add_vertex(1.0, {}, Activation::identity_clip());
    Network net = std::move(b).build(o);
    auto c = audit_complexity(net);
    CHECK(c.vertex_count == 1);
    CHECK(c.max_affine_l1 == doctest::Approx(1.0));
    CHECK(c.max_lipschitz == doctest::Approx(1.0));
    CHECK(c.K == 1);

    Network prod = product_net(0.5, 0.5);
    auto pc = audit_complexity(prod);
    CHECK(pc.vertex_count == 6);  // 2 sources + 4 module vertices
    CHECK(pc.max_affine_l1 <= 3.0);
    CHECK(pc.max_lipschitz <= 2.0);
}

TEST_CASE("monomial circuits: degree 0/1 add nothing, chains are exact") {
    NetworkBuilder b(2);
    std::pair<NodeRef, double> e0[] = {{NodeRef::input(0), 1.0}};
    std::pair<NodeRef, double> e1[] = {{NodeRef::input(1), 1.0}};
    std::vector<NodeRef> vars{b.add_vertex(0.0, e0, Activation::identity_clip()),
                              b.add_vertex(0.0, e1, Activation::identity_clip())};
    int base = b.vertex_count();

    int exps_deg1[] = {0, 1};
    NodeRef same = b.monomial_circuit(vars, exps_deg1);
    CHECK(b.vertex_count() == base);
    CHECK(!same.is_input);
    CHECK(same.index == vars[1].index);

    int exps_deg0[] = {0, 0};
    NodeRef sentinel = b.monomial_circuit(vars, exps_deg0);
    CHECK(sentinel.is_input);
    CHECK(sentinel.index == -1);
    CHECK(b.vertex_count() == base);

    int exps_sq[] = {2, 0};
    NodeRef sq = b.monomial_circuit(vars, exps_sq);
    CHECK(b.vertex_count() == base + 4);

    NetworkBuilder b2(1);
    std::vector<NodeRef> ys;
    for (double bias : {0.5, 0.7, 0.9}) ys.push_back(b2.add_vertex(bias, {}, Activation::identity_clip()));
    int exps_cube[] = {1, 1, 1};
    NodeRef cube = b2.monomial_circuit(ys, exps_cube);
    CHECK(b2.vertex_count() == 3 + 8);  // 2 modules
    Network net = std::move(b2).build(cube);
    CHECK(net.forward(BitString{0}) == doctest::Approx(0.5 * 0.7 * 0.9).epsilon(1e-12));

    Network sq_net = std::move(b).build(sq);
    // y_0 = x_0, so y_0^2 = x_0 on Boolean inputs.
    CHECK(sq_net.forward(BitString{1, 0}) == doctest::Approx(1.0));
    CHECK(sq_net.forward(BitString{0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("compile: identity form, constants") {
    PolyRep rep;
    rep.n = 3;
    rep.forms.push_back(LinearForm{{{0, 1.0}}});
    rep.poly.m = 1;
    rep.poly.add_term({1}, 1.0);
    Network net = compile_poly_to_nn(rep, 1);
    for (std::uint64_t xi = 0; xi < 8; ++xi) {
        BitString x = bits_from_index(xi, 3);
        CHECK(net.forward(x) == doctest::Approx(x[0] ? 1.0 : 0.0).epsilon(1e-12));
    }

    PolyRep c;
    c.n = 2;
    c.forms.resize(1);
    c.poly.m = 1;
    c.poly.add_term({0}, 0.3);
    Network cn = compile_poly_to_nn(c, 1);
    CHECK(cn.forward(BitString{1, 1}) == doctest::Approx(0.3));

    CHECK_THROWS_AS(compile_poly_to_nn(rep, 0), InvalidInput);
}

TEST_CASE("compiled networks clip the polynomial exactly") {
    Rng rng = make_rng(23);
    for (int inst = 0; inst < 10; ++inst) {
        PolyRep rep = testutil::random_small_rep(rng);
        int K = poly_complexity(rep).K;
        Network net = compile_poly_to_nn(rep, K);
        for (std::uint64_t xi = 0; xi < (std::uint64_t{1} << rep.n); ++xi) {
            BitString x = bits_from_index(xi, rep.n);
            CHECK(net.forward(x) == doctest::Approx(clip01(eval_poly(rep, x))).epsilon(1e-9));
        }
        // Every vertex value stays in [0,1] during evaluation.
        BitString probe(static_cast<std::size_t>(rep.n));
        for (auto& b : probe) b = static_cast<Bit>(rng() & 1u);
        for (double z : net.forward_trace(probe)) {
            CHECK(z >= 0.0);
            CHECK(z <= 1.0);
        }
    }
}

TEST_CASE("compiled-network audit bounds") {
    Rng rng = make_rng(24);
    for (int inst = 0; inst < 10; ++inst) {
        PolyRep rep = testutil::random_small_rep(rng);
        int K = poly_complexity(rep).K;
        Network net = compile_poly_to_nn(rep, K);
        auto audit = audit_complexity(net);
        int m = rep.m();
        int D = K;
        double binom = 1.0;
        for (int i = 1; i <= D; ++i) binom = binom * (m + D - (D - i)) / i;  // binom(m+D, D)
        CHECK(audit.vertex_count <= 1 + 4 * (D - 1) * binom + m);
        double q_l1 = substitute_scaling(rep, K).coeff_l1();
        CHECK(audit.max_affine_l1 <= std::max(q_l1, 3.0) + 1e-9);
        CHECK(audit.max_lipschitz <= 2.0);
    }
}

TEST_CASE("a-priori compiled bounds depend only on K") {
    // The guarantee bound of the compiler is a function of K alone; two reps
    // with equal realized complexity share it and both audits fall under it.
    Rng rng = make_rng(25);
    auto bound_for = [](int K) {
        double binom = 1.0;
        for (int i = 1; i <= K; ++i) binom = binom * (K + K - (K - i)) / i;  // binom(2K, K)
        double vertices = 1 + 4.0 * (K - 1) * binom + K;
        double affine = std::max(K * std::pow(3.0 * K, K), 3.0);
        return std::max({vertices, affine, 2.0});
    };
    for (int inst = 0; inst < 6; ++inst) {
        PolyRep a = testutil::random_small_rep(rng);
        PolyRep b = testutil::random_small_rep(rng);
        int Ka = poly_complexity(a).K, Kb = poly_complexity(b).K;
        if (Ka != Kb) continue;
        double bound = bound_for(Ka);
        CHECK(audit_complexity(compile_poly_to_nn(a, Ka)).K <= bound);
        CHECK(audit_complexity(compile_poly_to_nn(b, Kb)).K <= bound);
    }
}

TEST_CASE("network constructor rejects forward references") {
    Vertex v;
    v.hid_edges = {{0, 1.0}};  // self/forward reference at index 0
    CHECK_THROWS_AS(Network(2, {v}, 0), InvalidInput);
}
