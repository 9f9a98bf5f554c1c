#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "holofun/config.hpp"
#include "holofun/holographic.hpp"
#include "holofun/measure.hpp"
#include "holofun/network.hpp"
#include "holofun/rng.hpp"

namespace holofun {

// Hoeffding importance-sampling plan for a bounded affine form
// c + sum_i w_i z_i with |c| + sum|w_i| <= B: query indices with probability
// |w_i|/A and average A * sgn(w_i) * z_i. r = ceil(2 B^2 delta^-2 ln(2/rho)),
// or 0 when every w_i vanishes.
struct AffinePlan {
    double c = 0.0;
    double scale = 0.0;  // A = sum |w_i|
    std::optional<CoordinateMeasure> query;  // proportional to |w_i|; absent when A = 0
    std::map<int, int> signs;                // coordinate -> +1/-1
    double r = 0.0;
    double range_start = 0.0;  // offset into the flattened sample layout
    double b_bound = 0.0, delta = 0.0, rho = 0.0;
};

AffinePlan plan_affine(int n, double c, const std::map<int, double>& w, double B, double delta,
                       double rho);

double affine_sample_count(double B, double delta, double rho);

// Truth value c + sum w_i x_i for reference in tests/instrumentation.
double affine_truth(const AffinePlan& plan, const BitString& x);

// One literal estimate: draws r coordinates and averages.
double run_affine(const AffinePlan& plan, const BitString& x, Rng& rng);

// Recursive estimator tree mirroring the network vertices reachable from the
// output. Each node estimates its direct input part with an AffinePlan and
// adds beta-weighted child estimates before applying the activation.
struct PlanNode {
    int vertex = 0;
    Activation act = Activation::identity_clip();
    AffinePlan direct;
    std::vector<std::pair<double, PlanNode>> children;  // (beta_u, child)
};

struct SamplerPlan {
    int n = 0;
    int K = 0;
    double delta = 0.0;
    PlanNode root;
    double used_r = 0.0;      // dry-run total before padding
    double declared_r = 0.0;  // closed-form bound, a function of (K, delta) only
    std::optional<CoordinateMeasure> padding;  // dummy measure for padded slots
    std::vector<MeasureRun> layout;            // run-length layout including padding
};

// Worst case of the sample-count recursion over networks of complexity K:
// depth-K trees with K-1 children per node. Depends only on (K, delta).
double closed_form_sample_bound(int K, double delta);

// Recursion with (tau, rho) = (delta, delta) at the output vertex, direct
// accuracy gamma = tau/2K at failure rho/2, children at (gamma/K, rho/2K).
SamplerPlan plan_network(const Network& net, double delta);

struct PlanRunResult {
    double value = 0.0;
    std::vector<int> locations;  // materialized prefix only (padding ignored)
};

// Literal run: draws the materialized layout, reconstructs bottom-up, clips.
// Requires used_r within the literal sample budget.
PlanRunResult run_plan(const SamplerPlan& plan, const BitString& x, Rng& rng, const Limits& limits = {});

// Deterministic reconstruction Phi_s from explicit locations and bits
// (lengths cover the materialized prefix).
double plan_reconstruct(const SamplerPlan& plan, std::span<const int> locations, std::span<const Bit> bits);

// Distribution-exact simulation of Phi_S(x_S) for a fixed input: per
// AffinePlan the estimate depends on the drawn locations only through the
// (+1/0/-1) contribution counts, so sampling those counts reproduces the
// literal estimator's law. Counts are drawn exactly for r <= 1e9 and through
// Poisson/normal count approximations beyond (error far below Monte Carlo
// slack at that scale).
class PlanSimulator {
public:
    PlanSimulator(const SamplerPlan& plan, const BitString& x);
    double draw(Rng& rng) const;

private:
    struct NodeSim {
        double c = 0.0, scale = 0.0, r = 0.0;
        double p_plus = 0.0, p_minus = 0.0;
        Activation act = Activation::identity_clip();
        std::vector<std::pair<double, int>> children;  // (beta, node index)
    };
    double draw_node(int idx, Rng& rng) const;
    std::vector<NodeSim> nodes_;  // post-order, root last
};

// Prop nn->holo: k = declared r(K, eps) positions, layout measures, tests
// realized by the plan reconstruction. For any f with ||f - F||_inf <= eps
// the scheme certifies at (k, 3 eps).
HoloScheme nn_to_holo(const Network& net, double eps);

}  // namespace holofun
