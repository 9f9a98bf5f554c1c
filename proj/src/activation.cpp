#include "holofun/activation.hpp"

#include <algorithm>
#include <cmath>

#include "holofun/errors.hpp"

namespace holofun {

Activation Activation::piecewise_linear(std::vector<std::pair<double, double>> points, double lipschitz) {
    if (points.size() < 2) throw InvalidInput("piecewise-linear activation needs at least 2 breakpoints");
    if (!std::is_sorted(points.begin(), points.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; }))
        throw InvalidInput("piecewise-linear breakpoints must be sorted by x");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].first == points[i - 1].first)
            throw InvalidInput("piecewise-linear breakpoints must have distinct x");
    double max_slope = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        double slope = (points[i].second - points[i - 1].second) / (points[i].first - points[i - 1].first);
        max_slope = std::max(max_slope, std::abs(slope));
    }
    if (lipschitz + 1e-9 < max_slope)
        throw InvalidInput("declared Lipschitz constant below the realized max slope");
    for (const auto& [x, y] : points)
        if (y < 0.0 || y > 1.0) throw InvalidInput("piecewise-linear values must lie in [0,1]");
    return Activation(ActKind::PiecewiseLinear, std::move(points), lipschitz);
}

double Activation::operator()(double t) const {
    switch (kind_) {
        case ActKind::IdentityClip:
            return clip01(t);
        case ActKind::ClippedSquare: {
            double c = clip01(t);
            return c * c;
        }
        case ActKind::PiecewiseLinear: {
            // Constant extension outside the breakpoint range keeps the range
            // inside [0,1] without adding slope.
            if (t <= points_.front().first) return points_.front().second;
            if (t >= points_.back().first) return points_.back().second;
            auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                       [](double v, const auto& p) { return v < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            double w = (t - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
    }
    return 0.0;
}

std::string Activation::name() const {
    switch (kind_) {
        case ActKind::IdentityClip: return "identity-clip";
        case ActKind::ClippedSquare: return "clipped-square";
        case ActKind::PiecewiseLinear: return "piecewise-linear";
    }
    return "?";
}

}  // namespace holofun
