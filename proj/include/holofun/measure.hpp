#pragma once

#include <span>
#include <vector>

#include "holofun/rng.hpp"

namespace holofun {

// Probability distribution over coordinate indices 0..n-1. Weights are
// nonnegative and renormalized on construction; the stored sum is within
// 1e-12 of 1.
class CoordinateMeasure {
public:
    static CoordinateMeasure from_weights(std::vector<double> weights);
    static CoordinateMeasure point_mass(int n, int coord);
    static CoordinateMeasure uniform(int n);

    int n() const { return static_cast<int>(weights_.size()); }
    double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& weights() const { return weights_; }
    // Indices with strictly positive weight, ascending.
    const std::vector<int>& support() const { return support_; }

    // Alias-table draw, O(1); zero-weight coordinates are never returned.
    int sample(Rng& rng) const;

    bool operator==(const CoordinateMeasure& other) const { return weights_ == other.weights_; }

private:
    CoordinateMeasure() = default;
    std::vector<double> weights_;
    std::vector<double> alias_threshold_;
    std::vector<int> alias_;
    std::vector<int> support_;
};

// mu = (1/k) * sum of the inputs; all inputs must share n.
CoordinateMeasure average_measure(std::span<const CoordinateMeasure> measures);

// Run-length block of identical sampling measures, used wherever a scheme or
// plan repeats one measure many times. count can exceed 2^53 only for
// padding runs that are never drawn literally.
struct MeasureRun {
    CoordinateMeasure measure;
    double count = 1;
};

double total_run_count(std::span<const MeasureRun> runs);
const CoordinateMeasure& run_measure_at(std::span<const MeasureRun> runs, double position);

}  // namespace holofun
