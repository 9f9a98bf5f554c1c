#include "holofun/function.hpp"

#include <algorithm>
#include <cmath>

#include "holofun/errors.hpp"

namespace holofun {

namespace {

void check_values01(const std::vector<double>& values, const char* what) {
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(what) + ": values must lie in [0,1]");
}

}  // namespace

FuzzyFunction FuzzyFunction::table(int n, std::vector<double> values, const Limits& limits) {
    if (n <= 0) throw InvalidInput("table function: n must be positive");
    if (n > limits.table_n_limit)
        throw LimitExceeded("table function: n exceeds the exhaustive limit " +
                            std::to_string(limits.table_n_limit));
    if (values.size() != (std::size_t{1} << n)) throw InvalidInput("table function: need 2^n values");
    check_values01(values, "table function");
    return FuzzyFunction(n, TableBody{std::move(values)});
}

FuzzyFunction FuzzyFunction::weighted_average(CoordinateMeasure mu, Activation sigma) {
    int n = mu.n();
    return FuzzyFunction(n, WeightedAverageBody{std::move(mu), std::move(sigma)});
}

FuzzyFunction FuzzyFunction::junta(int n, std::vector<int> coords, std::vector<double> table) {
    if (n <= 0) throw InvalidInput("junta: n must be positive");
    if (coords.empty()) throw InvalidInput("junta: needs at least one coordinate");
    auto sorted = coords;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidInput("junta: coordinates must be distinct");
    for (int c : coords)
        if (c < 0 || c >= n) throw InvalidInput("junta: coordinate out of range");
    if (coords.size() >= 30 || table.size() != (std::size_t{1} << coords.size()))
        throw InvalidInput("junta: need 2^r table values");
    check_values01(table, "junta");
    return FuzzyFunction(n, JuntaBody{std::move(coords), std::move(table)});
}

FuzzyFunction FuzzyFunction::parity(int n) {
    if (n <= 0) throw InvalidInput("parity: n must be positive");
    return FuzzyFunction(n, ParityBody{});
}

double FuzzyFunction::operator()(const BitString& x) const {
    check_dimension(x.size(), static_cast<std::size_t>(n_), "eval_function");
    struct Visitor {
        const BitString& x;
        double operator()(const TableBody& b) const { return b.values[bit_index(x)]; }
        double operator()(const WeightedAverageBody& b) const {
            double mean = 0.0;
            for (int i : b.mu.support())
                if (x[static_cast<std::size_t>(i)]) mean += b.mu.weight(i);
            return b.sigma(mean);
        }
        double operator()(const JuntaBody& b) const {
            std::uint64_t idx = 0;
            for (int c : b.coords) idx = (idx << 1) | (x[static_cast<std::size_t>(c)] ? 1u : 0u);
            return b.table[idx];
        }
        double operator()(const ParityBody&) const {
            unsigned acc = 0;
            for (Bit b : x) acc ^= b;
            return static_cast<double>(acc & 1u);
        }
    };
    return std::visit(Visitor{x}, body_);
}

}  // namespace holofun
