#pragma once

#include <map>
#include <span>
#include <vector>

#include "holofun/bits.hpp"
#include "holofun/config.hpp"
#include "holofun/holographic.hpp"
#include "holofun/regularity.hpp"

namespace holofun {

// Sparse linear form over the n coordinates.
struct LinearForm {
    std::map<int, double> coeffs;  // coordinate -> weight

    double l1() const;
    double eval(const BitString& x) const;
};

// Sparse multivariate polynomial in m formal variables, monomial basis.
struct SparsePoly {
    int m = 0;
    std::map<std::vector<int>, double> terms;  // exponent vector -> coefficient

    int degree() const;
    double coeff_l1() const;
    double eval(std::span<const double> y) const;
    void add_term(const std::vector<int>& exps, double coef);
    void prune(double eps);
};

// Polynomial in bounded linear forms: x -> poly(L_1(x), ..., L_m(x)).
struct PolyRep {
    int n = 0;
    std::vector<LinearForm> forms;
    SparsePoly poly;

    int m() const { return static_cast<int>(forms.size()); }
};

struct PolyComplexity {
    int m = 0;
    int degree = 0;
    double coeff_l1 = 0.0;
    double max_form_l1 = 0.0;
    int K = 0;  // ceil of the max of the four
};

// Not clipped to [0,1].
double eval_poly(const PolyRep& rep, const BitString& x);

PolyComplexity poly_complexity(const PolyRep& rep);

// Q(y) = p(2K y_1 - K, ..., 2K y_m - K), expanded in the monomial basis.
// Requires poly_complexity(rep).K <= K; the result satisfies
// ||Q||_1 <= K (3K)^K.
SparsePoly substitute_scaling(const PolyRep& rep, int K);

struct HoloToPolyReport {
    int q = 0;                    // partition parts
    double eta = 0.0;             // eps / 2^k
    int refinement_steps = 0;
    double coeff_l1 = 0.0;        // realized, after assembly
    double coeff_l1_bound = 0.0;  // 4^k q^k
    double target_error = 0.0;    // 3 eps
    double prior_K_bound = 0.0;   // 4^k M(k, 2^k, eta)^k, reported not asserted
    SearchMode search = SearchMode::Exhaustive;
    PolyComplexity complexity;
    // Regularity internals, exportable for inspection.
    Partition partition;
    std::vector<StepArray> step_arrays;
    RegularityTrace trace;
};

// The regularization pipeline: test arrays g_a(s) = f_s(a), simultaneous weak
// box regularity at eta = eps/2^k, per-cell linear forms B_{l,u}, and the
// assembled polynomial P with coefficient l1-norm at most 4^k q^k. With
// exhaustive search the result satisfies ||f - P(B(x))||_inf <= 3 eps for any
// f the scheme certifies at (k, eps); heuristic search relies on the
// a-posteriori sup-norm check instead.
std::pair<PolyRep, HoloToPolyReport> holo_to_poly(const HoloScheme& scheme, double eps,
                                                  const SearchOptions& search, const Limits& limits = {});

}  // namespace holofun
