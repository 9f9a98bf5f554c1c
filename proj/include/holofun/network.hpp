#pragma once

#include <map>
#include <span>
#include <vector>

#include "holofun/activation.hpp"
#include "holofun/bits.hpp"
#include "holofun/polynomial.hpp"

namespace holofun {

// One non-input vertex: z_v = act(bias + sum_in w*x_i + sum_hid w*z_u).
// hid_edges only reference earlier vertices (DAG order).
struct Vertex {
    double bias = 0.0;
    std::map<int, double> in_edges;   // input coordinate -> weight
    std::map<int, double> hid_edges;  // earlier vertex index -> weight
    Activation act = Activation::identity_clip();

    double affine_l1() const;
};

class Network {
public:
    Network(int n, std::vector<Vertex> vertices, int output);

    int n() const { return n_; }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    int output() const { return output_; }

    double forward(const BitString& x) const;
    // All vertex values for one input, topological order.
    std::vector<double> forward_trace(const BitString& x) const;

private:
    int n_;
    std::vector<Vertex> vertices_;
    int output_;
};

struct NetComplexity {
    int vertex_count = 0;
    double max_affine_l1 = 0.0;
    double max_lipschitz = 0.0;
    int K = 0;  // ceil of the max of the three
};

NetComplexity audit_complexity(const Network& net);

// Either an input coordinate or a previously added vertex.
struct NodeRef {
    bool is_input = false;
    int index = 0;

    static NodeRef input(int i) { return {true, i}; }
    static NodeRef vertex(int v) { return {false, v}; }
};

class NetworkBuilder {
public:
    explicit NetworkBuilder(int n) : n_(n) {}

    NodeRef add_vertex(double bias, std::span<const std::pair<NodeRef, double>> edges, Activation act);
    // Four-vertex gadget computing u*v exactly for u, v in [0,1]:
    // chi(2 psi((u+v)/2) - psi(u)/2 - psi(v)/2).
    NodeRef add_mult_module(NodeRef u, NodeRef v);
    // Chains multiplication modules over the factor multiset of y^exps in
    // fixed left-to-right order; 4(|exps|-1) vertices for |exps| >= 2, none
    // for degree 0/1. Degree 0 returns an empty ref (is_input with index -1).
    NodeRef monomial_circuit(std::span<const NodeRef> vars, std::span<const int> exps);

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    Network build(NodeRef output) &&;

private:
    int n_;
    std::vector<Vertex> vertices_;
};

// First layer computes Y_i = (L_i(x)+K)/2K with clip activation (affine
// l1-norm <= 1); monomial circuits realize every degree>=2 monomial of the
// scaled polynomial Q = p(2Ky-K); one clip output vertex carries Q's affine
// part. The result equals clip(p(L_1(x),...,L_m(x))) exactly on {0,1}^n.
Network compile_poly_to_nn(const PolyRep& rep, int K);

}  // namespace holofun
