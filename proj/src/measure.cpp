#include "holofun/measure.hpp"

#include <algorithm>
#include <cmath>

#include "holofun/errors.hpp"

namespace holofun {

CoordinateMeasure CoordinateMeasure::from_weights(std::vector<double> weights) {
    if (weights.empty()) throw InvalidInput("measure needs at least one coordinate");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidInput("measure weights must be nonnegative");
        sum += w;
    }
    if (sum <= 0.0) throw InvalidInput("measure weights must not all vanish");
    CoordinateMeasure m;
    m.weights_.resize(weights.size());
    // Skip the division when already normalized: keeps construction
    // idempotent, so serialization round trips are bit-exact.
    if (std::abs(sum - 1.0) <= 1e-12) {
        m.weights_ = weights;
    } else {
        for (std::size_t i = 0; i < weights.size(); ++i) m.weights_[i] = weights[i] / sum;
    }
    for (std::size_t i = 0; i < m.weights_.size(); ++i)
        if (m.weights_[i] > 0.0) m.support_.push_back(static_cast<int>(i));

    // Walker alias table. Zero-weight entries get threshold 0 and always
    // defer to their alias, which is drawn from the overfull (positive) side.
    const std::size_t n = m.weights_.size();
    m.alias_threshold_.assign(n, 0.0);
    m.alias_.assign(n, m.support_.front());
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = m.weights_[i] * static_cast<double>(n);
    std::vector<int> small, large;
    for (std::size_t i = 0; i < n; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<int>(i));
    while (!small.empty() && !large.empty()) {
        int s = small.back();
        small.pop_back();
        int l = large.back();
        m.alias_threshold_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        m.alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
        if (scaled[static_cast<std::size_t>(l)] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (int l : large) m.alias_threshold_[static_cast<std::size_t>(l)] = 1.0;
    for (int s : small) {
        // Numerical leftovers; these columns are effectively full.
        m.alias_threshold_[static_cast<std::size_t>(s)] =
            m.weights_[static_cast<std::size_t>(s)] > 0.0 ? 1.0 : 0.0;
    }
    return m;
}

CoordinateMeasure CoordinateMeasure::point_mass(int n, int coord) {
    if (coord < 0 || coord >= n) throw InvalidInput("point mass coordinate out of range");
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    w[static_cast<std::size_t>(coord)] = 1.0;
    return from_weights(std::move(w));
}

CoordinateMeasure CoordinateMeasure::uniform(int n) {
    if (n <= 0) throw InvalidInput("uniform measure needs n >= 1");
    return from_weights(std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

int CoordinateMeasure::sample(Rng& rng) const {
    double x = uniform01(rng) * static_cast<double>(weights_.size());
    auto idx = static_cast<std::size_t>(x);
    if (idx >= weights_.size()) idx = weights_.size() - 1;
    double frac = x - static_cast<double>(idx);
    return frac < alias_threshold_[idx] ? static_cast<int>(idx) : alias_[idx];
}

CoordinateMeasure average_measure(std::span<const CoordinateMeasure> measures) {
    if (measures.empty()) throw InvalidInput("average_measure: empty sequence");
    int n = measures.front().n();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (const auto& m : measures) {
        if (m.n() != n) throw InvalidInput("average_measure: mismatched n");
        for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += m.weight(i);
    }
    return CoordinateMeasure::from_weights(std::move(acc));
}

double total_run_count(std::span<const MeasureRun> runs) {
    double total = 0.0;
    for (const auto& r : runs) total += r.count;
    return total;
}

const CoordinateMeasure& run_measure_at(std::span<const MeasureRun> runs, double position) {
    double acc = 0.0;
    for (const auto& r : runs) {
        acc += r.count;
        if (position < acc) return r.measure;
    }
    if (runs.empty()) throw InvalidInput("run_measure_at: empty layout");
    return runs.back().measure;
}

}  // namespace holofun
