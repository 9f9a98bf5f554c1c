#pragma once

#include <string>
#include <utility>
#include <vector>

namespace holofun {

inline double clip01(double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); }

enum class ActKind { IdentityClip, ClippedSquare, PiecewiseLinear };

// Named activation library. Every member maps R into [0,1] and carries an
// auditable Lipschitz constant:
//   identity-clip    chi(t) = min(1, max(0, t)),  Lip 1
//   clipped-square   psi(t) = chi(t)^2,           Lip 2
//   piecewise-linear declared breakpoints with a declared Lipschitz constant
class Activation {
public:
    static Activation identity_clip() { return Activation(ActKind::IdentityClip, {}, 1.0); }
    static Activation clipped_square() { return Activation(ActKind::ClippedSquare, {}, 2.0); }
    static Activation piecewise_linear(std::vector<std::pair<double, double>> points, double lipschitz);

    double operator()(double t) const;
    double lipschitz() const { return lipschitz_; }
    ActKind kind() const { return kind_; }
    const std::vector<std::pair<double, double>>& points() const { return points_; }
    std::string name() const;

    bool operator==(const Activation&) const = default;

private:
    Activation(ActKind kind, std::vector<std::pair<double, double>> points, double lipschitz)
        : kind_(kind), points_(std::move(points)), lipschitz_(lipschitz) {}

    ActKind kind_;
    std::vector<std::pair<double, double>> points_;  // sorted by x, ys in [0,1]
    double lipschitz_;
};

}  // namespace holofun
