#include "holofun/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "holofun/detail/product_iter.hpp"
#include "holofun/errors.hpp"

namespace holofun {

double LinearForm::l1() const {
    double acc = 0.0;
    for (const auto& [i, w] : coeffs) acc += std::abs(w);
    return acc;
}

double LinearForm::eval(const BitString& x) const {
    double acc = 0.0;
    for (const auto& [i, w] : coeffs)
        if (x[static_cast<std::size_t>(i)]) acc += w;
    return acc;
}

int SparsePoly::degree() const {
    int deg = 0;
    for (const auto& [exps, c] : terms) {
        int d = 0;
        for (int e : exps) d += e;
        deg = std::max(deg, d);
    }
    return deg;
}

double SparsePoly::coeff_l1() const {
    double acc = 0.0;
    for (const auto& [exps, c] : terms) acc += std::abs(c);
    return acc;
}

double SparsePoly::eval(std::span<const double> y) const {
    double acc = 0.0;
    for (const auto& [exps, c] : terms) {
        double mono = c;
        for (std::size_t i = 0; i < exps.size(); ++i)
            for (int e = 0; e < exps[i]; ++e) mono *= y[i];
        acc += mono;
    }
    return acc;
}

void SparsePoly::add_term(const std::vector<int>& exps, double coef) {
    if (coef == 0.0) return;
    auto [it, fresh] = terms.emplace(exps, coef);
    if (!fresh) {
        it->second += coef;
        if (it->second == 0.0) terms.erase(it);
    }
}

void SparsePoly::prune(double eps) {
    for (auto it = terms.begin(); it != terms.end();)
        it = std::abs(it->second) < eps ? terms.erase(it) : std::next(it);
}

double eval_poly(const PolyRep& rep, const BitString& x) {
    check_dimension(x.size(), static_cast<std::size_t>(rep.n), "eval_poly");
    std::vector<double> y(rep.forms.size());
    for (std::size_t i = 0; i < rep.forms.size(); ++i) y[i] = rep.forms[i].eval(x);
    return rep.poly.eval(y);
}

PolyComplexity poly_complexity(const PolyRep& rep) {
    PolyComplexity c;
    c.m = rep.m();
    c.degree = rep.poly.degree();
    c.coeff_l1 = rep.poly.coeff_l1();
    for (const auto& f : rep.forms) c.max_form_l1 = std::max(c.max_form_l1, f.l1());
    double worst = std::max({static_cast<double>(c.m), static_cast<double>(c.degree), c.coeff_l1,
                             c.max_form_l1});
    c.K = std::max(1, static_cast<int>(std::ceil(worst - 1e-9)));
    return c;
}

SparsePoly substitute_scaling(const PolyRep& rep, int K) {
    PolyComplexity c = poly_complexity(rep);
    if (c.K > K)
        throw InvalidInput("substitute_scaling: rep complexity " + std::to_string(c.K) +
                           " exceeds K = " + std::to_string(K));
    const double two_k = 2.0 * K;
    SparsePoly q;
    q.m = rep.m();
    for (const auto& [exps, coef] : rep.poly.terms) {
        // Expand coef * prod_i (2K y_i - K)^{e_i} one variable at a time.
        std::map<std::vector<int>, double> partial;
        partial.emplace(std::vector<int>(exps.size(), 0), coef);
        for (std::size_t i = 0; i < exps.size(); ++i) {
            int e = exps[i];
            if (e == 0) continue;
            // Binomial coefficients of (2K y - K)^e in increasing powers of y.
            std::vector<double> pow_coef(static_cast<std::size_t>(e) + 1);
            for (int j = 0; j <= e; ++j) {
                double binom = 1.0;
                for (int l = 0; l < j; ++l) binom = binom * (e - l) / (l + 1);
                pow_coef[static_cast<std::size_t>(j)] =
                    binom * std::pow(two_k, j) * std::pow(-static_cast<double>(K), e - j);
            }
            std::map<std::vector<int>, double> next;
            for (const auto& [pe, pc] : partial)
                for (int j = 0; j <= e; ++j) {
                    auto ne = pe;
                    ne[i] += j;
                    double nc = pc * pow_coef[static_cast<std::size_t>(j)];
                    auto [it, fresh] = next.emplace(std::move(ne), nc);
                    if (!fresh) it->second += nc;
                }
            partial = std::move(next);
        }
        for (const auto& [pe, pc] : partial) q.add_term(pe, pc);
    }
    double l1 = q.coeff_l1();
    if (!std::isfinite(l1))
        throw std::overflow_error("substitute_scaling: coefficient magnitude overflow; bound K(3K)^K = " +
                                  std::to_string(K * std::pow(3.0 * K, K)));
    double bound = K * std::pow(3.0 * K, K);
    if (std::isfinite(bound) && l1 > bound * (1.0 + 1e-9))
        throw std::logic_error("substitute_scaling: coefficient l1-norm exceeds K(3K)^K");
    return q;
}

namespace {

// The arrays g_a(s) = f_s(a) for all 2^k bit patterns a, over [n]^k.
std::vector<KArray> scheme_test_arrays(const HoloScheme& scheme, const Limits& limits) {
    const int n = scheme.n();
    const int k = scheme.k_int();
    if (k >= 30) throw LimitExceeded("holo_to_poly: 2^k pattern arrays infeasible");
    const std::size_t patterns = std::size_t{1} << k;
    std::vector<KArray> arrays;
    arrays.reserve(patterns);

    if (const auto* mean = std::get_if<MeanTest>(&scheme.tests())) {
        for (std::size_t a = 0; a < patterns; ++a) {
            BitString alpha = bits_from_index(a, k);
            double ones = 0.0;
            for (Bit b : alpha) ones += b;
            double value = mean->sigma(ones / k);
            arrays.push_back(KArray::procedural(n, k, [value](std::span<const int>) { return value; }));
        }
        return arrays;
    }

    double cells = std::pow(static_cast<double>(n), k);
    if (cells > limits.enumeration_term_limit)
        throw LimitExceeded("holo_to_poly: test enumeration over [n]^k infeasible");

    const bool dense = cells * static_cast<double>(patterns) <= 2e7;
    for (std::size_t a = 0; a < patterns; ++a) {
        BitString alpha = bits_from_index(a, k);
        if (dense) {
            std::vector<double> values(static_cast<std::size_t>(cells), 0.0);
            // Fill the support product; zero-measure tuples keep value 0 and
            // are never integrated against.
            std::vector<std::vector<int>> lists;
            for (int j = 0; j < k; ++j) lists.push_back(scheme.measure(j).support());
            detail::product_scan(lists, [](int, int) { return 1.0; },
                                 [&](std::span<const int> s, double) {
                                     std::size_t flat = 0;
                                     for (int v : s)
                                         flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
                                     values[flat] = scheme.test_value(s, alpha);
                                 });
            arrays.push_back(KArray::dense(n, k, std::move(values)));
        } else {
            auto scheme_copy = std::make_shared<const HoloScheme>(scheme);
            arrays.push_back(KArray::procedural(
                n, k, [scheme_copy, alpha](std::span<const int> s) { return scheme_copy->test_value(s, alpha); }));
        }
    }
    return arrays;
}

}  // namespace

std::pair<PolyRep, HoloToPolyReport> holo_to_poly(const HoloScheme& scheme, double eps,
                                                  const SearchOptions& search, const Limits& limits) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("holo_to_poly: eps must lie in (0,1)");
    const int n = scheme.n();
    const int k = scheme.k_int();
    const double t = std::pow(2.0, k);
    const double eta = eps / t;

    std::vector<CoordinateMeasure> measures;
    measures.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) measures.push_back(scheme.measure(j));

    std::vector<KArray> arrays = scheme_test_arrays(scheme, limits);
    RegularizeResult reg =
        weak_box_regularize(arrays, measures, eta, Partition::trivial(n), search, limits);
    const int q = reg.partition.m;

    // Per-coordinate part masses a_{l,u} and cell forms B_{l,u}.
    PolyRep rep;
    rep.n = n;
    rep.poly.m = k * q;
    rep.forms.resize(static_cast<std::size_t>(k * q));
    std::vector<std::vector<double>> part_mass(static_cast<std::size_t>(k),
                                               std::vector<double>(static_cast<std::size_t>(q), 0.0));
    for (int l = 0; l < k; ++l)
        for (int i : measures[static_cast<std::size_t>(l)].support()) {
            int u = reg.partition.labels[static_cast<std::size_t>(i)];
            part_mass[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)] +=
                measures[static_cast<std::size_t>(l)].weight(i);
            rep.forms[static_cast<std::size_t>(l * q + u)].coeffs[i] =
                measures[static_cast<std::size_t>(l)].weight(i);
        }

    // P = sum_a sum_u W_a(u) prod_j C_{j,u_j,a_j} with C_{l,u,1} = B_{l,u}
    // and C_{l,u,0} = a_{l,u} - B_{l,u}, expanded over the zero positions.
    const std::size_t patterns = std::size_t{1} << k;
    std::vector<int> u(static_cast<std::size_t>(k), 0);
    std::vector<int> exps(static_cast<std::size_t>(k * q));
    for (std::size_t a = 0; a < patterns; ++a) {
        BitString alpha = bits_from_index(a, k);
        std::fill(u.begin(), u.end(), 0);
        for (;;) {
            double w = reg.step_arrays[a].at(u);
            if (w != 0.0) {
                std::vector<int> zero_pos;
                for (int j = 0; j < k; ++j)
                    if (!alpha[static_cast<std::size_t>(j)]) zero_pos.push_back(j);
                const std::size_t subsets = std::size_t{1} << zero_pos.size();
                for (std::size_t sub = 0; sub < subsets; ++sub) {
                    // Variables: all alpha=1 positions, plus the chosen subset
                    // of alpha=0 positions (each contributing -B); the rest
                    // contribute the constant a_{l,u}.
                    double coef = w;
                    std::fill(exps.begin(), exps.end(), 0);
                    for (int j = 0; j < k; ++j)
                        if (alpha[static_cast<std::size_t>(j)])
                            exps[static_cast<std::size_t>(j * q + u[static_cast<std::size_t>(j)])] += 1;
                    for (std::size_t z = 0; z < zero_pos.size(); ++z) {
                        int j = zero_pos[z];
                        if (sub >> z & 1u) {
                            exps[static_cast<std::size_t>(j * q + u[static_cast<std::size_t>(j)])] += 1;
                            coef = -coef;
                        } else {
                            coef *= part_mass[static_cast<std::size_t>(j)][static_cast<std::size_t>(
                                u[static_cast<std::size_t>(j)])];
                        }
                    }
                    rep.poly.add_term(exps, coef);
                }
            }
            int j = k - 1;
            while (j >= 0) {
                if (++u[static_cast<std::size_t>(j)] < q) break;
                u[static_cast<std::size_t>(j)] = 0;
                --j;
            }
            if (j < 0) break;
        }
    }
    rep.poly.prune(limits.poly_prune_eps);

    HoloToPolyReport report;
    report.q = q;
    report.eta = eta;
    report.refinement_steps = static_cast<int>(reg.trace.steps.size());
    report.coeff_l1 = rep.poly.coeff_l1();
    report.coeff_l1_bound = std::pow(4.0, k) * std::pow(static_cast<double>(q), k);
    report.target_error = 3.0 * eps;
    report.search = reg.search;
    // a-priori part bound M = 2^(k ceil(t/eta^2)), astronomically loose;
    // realized complexity is what matters downstream.
    double steps_bound = std::ceil(t / (eta * eta));
    report.prior_K_bound = std::pow(4.0, k) * std::pow(std::pow(2.0, k * steps_bound), k);
    report.complexity = poly_complexity(rep);
    report.partition = reg.partition;
    report.step_arrays = reg.step_arrays;
    report.trace = reg.trace;
    if (report.coeff_l1 > report.coeff_l1_bound * (1.0 + 1e-9))
        throw std::logic_error("holo_to_poly: assembled coefficient norm exceeds 4^k q^k");
    return {std::move(rep), report};
}

}  // namespace holofun
