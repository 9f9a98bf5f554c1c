#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "holofun/config.hpp"
#include "holofun/measure.hpp"
#include "holofun/rng.hpp"

namespace holofun {

// [0,1]-valued array on [n]^k. Dense storage when n^k fits the limit,
// procedural otherwise. Copies share dense storage.
class KArray {
public:
    using EvalFn = std::function<double(std::span<const int>)>;

    static KArray dense(int n, int k, std::vector<double> values);
    static KArray procedural(int n, int k, EvalFn fn);

    int n() const { return n_; }
    int k() const { return k_; }
    bool is_dense() const { return dense_ != nullptr; }

    double value(std::span<const int> s) const;

private:
    KArray(int n, int k) : n_(n), k_(k) {}
    int n_ = 0, k_ = 0;
    std::shared_ptr<const std::vector<double>> dense_;  // row-major, s[0] slowest
    EvalFn fn_;
};

// Partition of {0..n-1} into m nonempty parts, labels in 0..m-1, parts
// numbered by first occurrence.
struct Partition {
    int n = 0;
    int m = 0;
    std::vector<int> labels;

    static Partition trivial(int n);
    static Partition from_labels(std::vector<int> labels);
    // Common refinement with each of the k subsets (membership masks over
    // coordinates); empty parts pruned and labels compacted.
    Partition refine_by(std::span<const std::vector<char>> boxes) const;
    bool refines(const Partition& coarser) const;
};

// Step (piecewise constant) array on [m]^k.
struct StepArray {
    int m = 0, k = 0;
    std::vector<double> w;  // row-major, u[0] slowest

    double at(std::span<const int> u) const;
    double at_flat(std::size_t flat) const { return w[flat]; }
};

// A product box: k coordinate-membership masks of length n.
using Box = std::vector<std::vector<char>>;

// sum over s in A_1 x...x A_k of h(s) * prod_j mu_j(s_j).
double box_inner_product(const KArray& h, const Box& box, std::span<const CoordinateMeasure> measures);

// Conditional expectation of h on the product partition under the product
// measure; 0 on boxes of product measure zero.
StepArray conditional_expectation(const KArray& h, const Partition& p,
                                  std::span<const CoordinateMeasure> measures);

// sum_i || E(h_i | P^k) ||_2^2 under the product measure; lies in [0, t].
double energy(std::span<const KArray> hs, const Partition& p, std::span<const CoordinateMeasure> measures);

double partition_cell_mass(const Partition& p, std::span<const CoordinateMeasure> measures,
                           std::span<const int> u);

enum class SearchMode { Exhaustive, Alternating };

struct SearchOptions {
    SearchMode mode = SearchMode::Exhaustive;
    int restarts = 32;           // alternating mode
    int max_rounds = 64;         // alternating ascent rounds per restart
    std::uint64_t seed = 0;      // alternating mode start boxes
};

struct Violation {
    int array_index = 0;
    Box box;
    double value = 0.0;  // the witnessed inner product, |value| > eta
};

// Looks for a box with |<residual_i, 1_A>| > eta. Exhaustive mode enumerates
// subsets of the first k-1 coordinates and picks the last one greedily from
// the sign of the conditional marginal, which is exact. Alternating mode is
// coordinate-wise ascent from random starts; it may miss violations but any
// returned box is re-verified, so it never reports a spurious one.
std::optional<Violation> find_violating_box(std::span<const KArray> residuals,
                                            std::span<const CoordinateMeasure> measures, double eta,
                                            const SearchOptions& search, const Limits& limits = {});

struct TraceStep {
    int array_index = 0;
    Box box;
    double energy_before = 0.0;
    double energy_after = 0.0;
};

struct RegularityTrace {
    std::vector<TraceStep> steps;
    double final_energy = 0.0;
};

struct RegularizeResult {
    Partition partition;
    std::vector<StepArray> step_arrays;
    RegularityTrace trace;
    SearchMode search = SearchMode::Exhaustive;
};

// Energy-increment refinement: repeatedly refine by a violating box until the
// chosen search finds none. Each recorded step raises the total energy by at
// least eta^2, so the step count is at most ceil(t / eta^2) and the part
// count at most m0 * 2^(k * steps).
RegularizeResult weak_box_regularize(std::span<const KArray> hs, std::span<const CoordinateMeasure> measures,
                                     double eta, const Partition& p0, const SearchOptions& search,
                                     const Limits& limits = {});

// Residual arrays h_i - E(h_i | P^k), materialized procedurally.
std::vector<KArray> residual_arrays(std::span<const KArray> hs, std::span<const StepArray> steps,
                                    const Partition& p);

}  // namespace holofun
