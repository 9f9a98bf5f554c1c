#include "holofun/network.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "holofun/errors.hpp"

namespace holofun {

double Vertex::affine_l1() const {
    double acc = std::abs(bias);
    for (const auto& [i, w] : in_edges) acc += std::abs(w);
    for (const auto& [u, w] : hid_edges) acc += std::abs(w);
    return acc;
}

Network::Network(int n, std::vector<Vertex> vertices, int output)
    : n_(n), vertices_(std::move(vertices)), output_(output) {
    if (n_ <= 0) throw InvalidInput("network: n must be positive");
    if (vertices_.empty()) throw InvalidInput("network: needs at least one non-input vertex");
    if (output_ < 0 || output_ >= static_cast<int>(vertices_.size()))
        throw InvalidInput("network: output index out of range");
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        for (const auto& [i, w] : vertices_[v].in_edges)
            if (i < 0 || i >= n_) throw InvalidInput("network: input edge out of range");
        for (const auto& [u, w] : vertices_[v].hid_edges)
            if (u < 0 || u >= static_cast<int>(v))
                throw InvalidInput("network: internal edges must reference earlier vertices");
    }
}

std::vector<double> Network::forward_trace(const BitString& x) const {
    check_dimension(x.size(), static_cast<std::size_t>(n_), "forward");
    std::vector<double> z(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        const Vertex& vert = vertices_[v];
        double pre = vert.bias;
        for (const auto& [i, w] : vert.in_edges)
            if (x[static_cast<std::size_t>(i)]) pre += w;
        for (const auto& [u, w] : vert.hid_edges) pre += w * z[static_cast<std::size_t>(u)];
        z[v] = vert.act(pre);
        assert(z[v] >= 0.0 && z[v] <= 1.0);
    }
    return z;
}

double Network::forward(const BitString& x) const {
    return forward_trace(x)[static_cast<std::size_t>(output_)];
}

NetComplexity audit_complexity(const Network& net) {
    NetComplexity c;
    c.vertex_count = static_cast<int>(net.vertices().size());
    for (const auto& v : net.vertices()) {
        c.max_affine_l1 = std::max(c.max_affine_l1, v.affine_l1());
        c.max_lipschitz = std::max(c.max_lipschitz, v.act.lipschitz());
    }
    double worst = std::max({static_cast<double>(c.vertex_count), c.max_affine_l1, c.max_lipschitz});
    c.K = std::max(1, static_cast<int>(std::ceil(worst - 1e-9)));
    return c;
}

NodeRef NetworkBuilder::add_vertex(double bias, std::span<const std::pair<NodeRef, double>> edges,
                                   Activation act) {
    Vertex v;
    v.bias = bias;
    v.act = std::move(act);
    for (const auto& [ref, w] : edges) {
        if (w == 0.0) continue;
        if (ref.is_input) {
            if (ref.index < 0 || ref.index >= n_) throw InvalidInput("builder: input index out of range");
            v.in_edges[ref.index] += w;
        } else {
            if (ref.index < 0 || ref.index >= vertex_count())
                throw InvalidInput("builder: vertex reference out of range");
            v.hid_edges[ref.index] += w;
        }
    }
    vertices_.push_back(std::move(v));
    return NodeRef::vertex(vertex_count() - 1);
}

NodeRef NetworkBuilder::add_mult_module(NodeRef u, NodeRef v) {
    const auto psi = Activation::clipped_square();
    std::pair<NodeRef, double> mid[] = {{u, 0.5}, {v, 0.5}};
    NodeRef a = add_vertex(0.0, mid, psi);
    std::pair<NodeRef, double> eu[] = {{u, 1.0}};
    NodeRef b = add_vertex(0.0, eu, psi);
    std::pair<NodeRef, double> ev[] = {{v, 1.0}};
    NodeRef c = add_vertex(0.0, ev, psi);
    std::pair<NodeRef, double> out[] = {{a, 2.0}, {b, -0.5}, {c, -0.5}};
    return add_vertex(0.0, out, Activation::identity_clip());
}

NodeRef NetworkBuilder::monomial_circuit(std::span<const NodeRef> vars, std::span<const int> exps) {
    std::vector<NodeRef> factors;
    for (std::size_t i = 0; i < exps.size(); ++i)
        for (int e = 0; e < exps[i]; ++e) factors.push_back(vars[i]);
    if (factors.empty()) return NodeRef{true, -1};  // constant monomial sentinel
    NodeRef acc = factors[0];
    for (std::size_t i = 1; i < factors.size(); ++i) acc = add_mult_module(acc, factors[i]);
    return acc;
}

Network NetworkBuilder::build(NodeRef output) && {
    if (output.is_input) throw InvalidInput("builder: output must be a non-input vertex");
    return Network(n_, std::move(vertices_), output.index);
}

Network compile_poly_to_nn(const PolyRep& rep, int K) {
    PolyComplexity c = poly_complexity(rep);
    if (c.K > K)
        throw InvalidInput("compile_poly_to_nn: rep complexity " + std::to_string(c.K) +
                           " exceeds K = " + std::to_string(K));
    NetworkBuilder builder(rep.n);

    // Layer 1: Y_i = (L_i(x) + K) / 2K via the clipped identity; the affine
    // l1-norm is (K + sum|w_ij|)/2K <= 1, and Y_i lands in [0,1] on Boolean
    // inputs so the clip is exact.
    std::vector<NodeRef> y;
    y.reserve(rep.forms.size());
    for (const auto& form : rep.forms) {
        std::vector<std::pair<NodeRef, double>> edges;
        edges.reserve(form.coeffs.size());
        for (const auto& [i, w] : form.coeffs) edges.emplace_back(NodeRef::input(i), w / (2.0 * K));
        y.push_back(builder.add_vertex(0.5, edges, Activation::identity_clip()));
    }

    SparsePoly q = substitute_scaling(rep, K);

    double bias = 0.0;
    std::vector<std::pair<NodeRef, double>> output_edges;
    for (const auto& [exps, coef] : q.terms) {
        int deg = 0;
        for (int e : exps) deg += e;
        if (deg == 0) {
            bias += coef;
        } else if (deg == 1) {
            std::size_t i = 0;
            while (exps[i] == 0) ++i;
            output_edges.emplace_back(y[i], coef);
        } else {
            output_edges.emplace_back(builder.monomial_circuit(y, exps), coef);
        }
    }
    NodeRef out = builder.add_vertex(bias, output_edges, Activation::identity_clip());
    return std::move(builder).build(out);
}

}  // namespace holofun
