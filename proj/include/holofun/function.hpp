#pragma once

#include <variant>
#include <vector>

#include "holofun/activation.hpp"
#include "holofun/bits.hpp"
#include "holofun/config.hpp"
#include "holofun/measure.hpp"

namespace holofun {

// Explicit 2^n value table, lexicographic with coordinate 1 as the most
// significant bit (see bits.hpp).
struct TableBody {
    std::vector<double> values;
};

// x -> sigma(sum_i mu(i) x_i). sigma comes from the activation library; the
// Hoeffding scheme construction additionally requires Lip(sigma) <= 1.
struct WeightedAverageBody {
    CoordinateMeasure mu;
    Activation sigma;
};

// Depends only on the listed coordinates; table indexed by their bits with
// coords[0] most significant.
struct JuntaBody {
    std::vector<int> coords;  // distinct, 0-based
    std::vector<double> table;
};

struct ParityBody {};

class FuzzyFunction {
public:
    using Body = std::variant<TableBody, WeightedAverageBody, JuntaBody, ParityBody>;

    static FuzzyFunction table(int n, std::vector<double> values, const Limits& limits = {});
    static FuzzyFunction weighted_average(CoordinateMeasure mu, Activation sigma);
    static FuzzyFunction junta(int n, std::vector<int> coords, std::vector<double> table);
    static FuzzyFunction parity(int n);

    int n() const { return n_; }
    const Body& body() const { return body_; }

    double operator()(const BitString& x) const;

private:
    FuzzyFunction(int n, Body body) : n_(n), body_(std::move(body)) {}
    int n_;
    Body body_;
};

}  // namespace holofun
