#include "holofun/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "holofun/detail/product_iter.hpp"
#include "holofun/errors.hpp"

namespace holofun {

namespace {

std::size_t flat_index(std::span<const int> s, int base) {
    std::size_t idx = 0;
    for (int v : s) idx = idx * static_cast<std::size_t>(base) + static_cast<std::size_t>(v);
    return idx;
}

std::vector<std::vector<int>> support_lists(std::span<const CoordinateMeasure> measures) {
    std::vector<std::vector<int>> lists;
    lists.reserve(measures.size());
    for (const auto& m : measures) lists.push_back(m.support());
    return lists;
}

// Per-coordinate part masses: mass[j][part] = mu_j(T_part).
std::vector<std::vector<double>> part_masses(const Partition& p, std::span<const CoordinateMeasure> measures) {
    std::vector<std::vector<double>> mass(measures.size(),
                                          std::vector<double>(static_cast<std::size_t>(p.m), 0.0));
    for (std::size_t j = 0; j < measures.size(); ++j)
        for (int i : measures[j].support())
            mass[j][static_cast<std::size_t>(p.labels[static_cast<std::size_t>(i)])] += measures[j].weight(i);
    return mass;
}

double energy_of_steps(std::span<const StepArray> steps, const std::vector<std::vector<double>>& mass) {
    if (steps.empty()) return 0.0;
    const int m = steps.front().m;
    const int k = steps.front().k;
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(k));
    for (auto& c : cells) {
        c.resize(static_cast<std::size_t>(m));
        for (int u = 0; u < m; ++u) c[static_cast<std::size_t>(u)] = u;
    }
    double total = 0.0;
    detail::product_scan(cells, [&](int j, int u) { return mass[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)]; },
                         [&](std::span<const int> u, double cell_mass) {
                             if (cell_mass <= 0.0) return;
                             std::size_t flat = flat_index(u, m);
                             for (const auto& w : steps) {
                                 double v = w.w[flat];
                                 total += v * v * cell_mass;
                             }
                         });
    return total;
}

}  // namespace

KArray KArray::dense(int n, int k, std::vector<double> values) {
    if (n <= 0 || k <= 0) throw InvalidInput("KArray: n, k must be positive");
    double want = std::pow(static_cast<double>(n), k);
    if (static_cast<double>(values.size()) != want) throw InvalidInput("KArray: need n^k values");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("KArray: values must lie in [0,1]");
    KArray a(n, k);
    a.dense_ = std::make_shared<const std::vector<double>>(std::move(values));
    return a;
}

KArray KArray::procedural(int n, int k, EvalFn fn) {
    if (n <= 0 || k <= 0) throw InvalidInput("KArray: n, k must be positive");
    if (!fn) throw InvalidInput("KArray: null eval function");
    KArray a(n, k);
    a.fn_ = std::move(fn);
    return a;
}

double KArray::value(std::span<const int> s) const {
    if (dense_) return (*dense_)[flat_index(s, n_)];
    return fn_(s);
}

Partition Partition::trivial(int n) {
    Partition p;
    p.n = n;
    p.m = 1;
    p.labels.assign(static_cast<std::size_t>(n), 0);
    return p;
}

Partition Partition::from_labels(std::vector<int> labels) {
    if (labels.empty()) throw InvalidInput("Partition: empty label vector");
    Partition p;
    p.n = static_cast<int>(labels.size());
    // Compact: parts numbered by first occurrence, empty labels pruned.
    std::map<int, int> remap;
    p.labels.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = remap.emplace(labels[i], static_cast<int>(remap.size()));
        p.labels[i] = it->second;
    }
    p.m = static_cast<int>(remap.size());
    return p;
}

Partition Partition::refine_by(std::span<const std::vector<char>> boxes) const {
    std::vector<int> keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int key = labels[static_cast<std::size_t>(i)];
        for (const auto& mask : boxes) key = key * 2 + (mask[static_cast<std::size_t>(i)] ? 1 : 0);
        keys[static_cast<std::size_t>(i)] = key;
    }
    return from_labels(std::move(keys));
}

bool Partition::refines(const Partition& coarser) const {
    if (n != coarser.n) return false;
    std::map<int, int> to_coarse;
    for (int i = 0; i < n; ++i) {
        auto [it, fresh] = to_coarse.emplace(labels[static_cast<std::size_t>(i)],
                                             coarser.labels[static_cast<std::size_t>(i)]);
        if (!fresh && it->second != coarser.labels[static_cast<std::size_t>(i)]) return false;
    }
    return true;
}

double StepArray::at(std::span<const int> u) const { return w[flat_index(u, m)]; }

double box_inner_product(const KArray& h, const Box& box, std::span<const CoordinateMeasure> measures) {
    if (static_cast<int>(box.size()) != h.k() || static_cast<int>(measures.size()) != h.k())
        throw InvalidInput("box_inner_product: arity mismatch");
    std::vector<std::vector<int>> lists(box.size());
    for (std::size_t j = 0; j < box.size(); ++j)
        for (int i : measures[j].support())
            if (box[j][static_cast<std::size_t>(i)]) lists[j].push_back(i);
    detail::Kahan sum;
    detail::product_scan(lists, [&](int j, int i) { return measures[static_cast<std::size_t>(j)].weight(i); },
                         [&](std::span<const int> s, double w) { sum.add(h.value(s) * w); });
    return sum.sum;
}

StepArray conditional_expectation(const KArray& h, const Partition& p,
                                  std::span<const CoordinateMeasure> measures) {
    const int k = h.k();
    const int m = p.m;
    StepArray w;
    w.m = m;
    w.k = k;
    std::size_t cells = 1;
    for (int j = 0; j < k; ++j) cells *= static_cast<std::size_t>(m);
    w.w.assign(cells, 0.0);
    std::vector<detail::Kahan> numer(cells);

    auto lists = support_lists(measures);
    detail::product_scan(lists, [&](int j, int i) { return measures[static_cast<std::size_t>(j)].weight(i); },
                         [&](std::span<const int> s, double weight) {
                             std::size_t cell = 0;
                             for (int v : s)
                                 cell = cell * static_cast<std::size_t>(m) +
                                        static_cast<std::size_t>(p.labels[static_cast<std::size_t>(v)]);
                             numer[cell].add(h.value(s) * weight);
                         });

    auto mass = part_masses(p, measures);
    std::vector<std::vector<int>> cell_lists(static_cast<std::size_t>(k));
    for (auto& c : cell_lists) {
        c.resize(static_cast<std::size_t>(m));
        for (int u = 0; u < m; ++u) c[static_cast<std::size_t>(u)] = u;
    }
    detail::product_scan(cell_lists, [&](int j, int u) { return mass[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)]; },
                         [&](std::span<const int> u, double denom) {
                             std::size_t flat = flat_index(u, m);
                             w.w[flat] = denom > 0.0 ? std::clamp(numer[flat].sum / denom, 0.0, 1.0) : 0.0;
                         });
    return w;
}

double energy(std::span<const KArray> hs, const Partition& p, std::span<const CoordinateMeasure> measures) {
    std::vector<StepArray> steps;
    steps.reserve(hs.size());
    for (const auto& h : hs) steps.push_back(conditional_expectation(h, p, measures));
    return energy_of_steps(steps, part_masses(p, measures));
}

double partition_cell_mass(const Partition& p, std::span<const CoordinateMeasure> measures,
                           std::span<const int> u) {
    auto mass = part_masses(p, measures);
    double prod = 1.0;
    for (std::size_t j = 0; j < u.size(); ++j) prod *= mass[j][static_cast<std::size_t>(u[j])];
    return prod;
}

std::vector<KArray> residual_arrays(std::span<const KArray> hs, std::span<const StepArray> steps,
                                    const Partition& p) {
    std::vector<KArray> out;
    out.reserve(hs.size());
    auto labels = std::make_shared<const std::vector<int>>(p.labels);
    for (std::size_t i = 0; i < hs.size(); ++i) {
        KArray h = hs[i];
        auto w = std::make_shared<const StepArray>(steps[i]);
        int m = p.m;
        out.push_back(KArray::procedural(h.n(), h.k(), [h, w, labels, m](std::span<const int> s) {
            std::size_t cell = 0;
            for (int v : s)
                cell = cell * static_cast<std::size_t>(m) +
                       static_cast<std::size_t>((*labels)[static_cast<std::size_t>(v)]);
            return h.value(s) - w->w[cell];
        }));
    }
    return out;
}

namespace {

// note: residual values are not in [0,1]; KArray::procedural does not range
// check, only dense construction does.

struct GreedyPick {
    double value = 0.0;  // signed inner product of the chosen subset
    std::vector<char> mask;
};

// Given per-coordinate signed marginals g(i) (already including mu weights),
// the subset maximizing |sum over chosen| is either all-positive or
// all-negative entries. Strictly positive marginals are included, zeros
// excluded.
GreedyPick greedy_last_subset(std::span<const double> marginal) {
    GreedyPick pos, neg;
    pos.mask.assign(marginal.size(), 0);
    neg.mask.assign(marginal.size(), 0);
    for (std::size_t i = 0; i < marginal.size(); ++i) {
        if (marginal[i] > 0.0) {
            pos.value += marginal[i];
            pos.mask[i] = 1;
        } else if (marginal[i] < 0.0) {
            neg.value += marginal[i];
            neg.mask[i] = 1;
        }
    }
    return std::abs(pos.value) >= std::abs(neg.value) ? pos : neg;
}

// |<r, 1_A>| <= E|r| for every box, so arrays with small absolute mean can
// never violate and are skipped outright.
double abs_mean(const KArray& r, std::span<const CoordinateMeasure> measures) {
    std::vector<std::vector<int>> lists;
    lists.reserve(measures.size());
    for (const auto& m : measures) lists.push_back(m.support());
    detail::Kahan acc;
    detail::product_scan(lists, [&](int j, int i) { return measures[static_cast<std::size_t>(j)].weight(i); },
                         [&](std::span<const int> s, double w) { acc.add(std::abs(r.value(s)) * w); });
    return acc.sum;
}

std::optional<Violation> find_exhaustive(std::span<const KArray> residuals,
                                         std::span<const CoordinateMeasure> measures, double eta,
                                         const Limits& limits) {
    const int k = residuals.front().k();
    const int n = residuals.front().n();
    double budget = static_cast<double>(k) * std::pow(2.0, static_cast<double>(n) * (k - 1)) * n;
    if (budget > limits.box_search_budget)
        throw LimitExceeded("exhaustive box search over budget; use alternating search");

    const auto lists = support_lists(measures);
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const KArray& r = residuals[i];
        if (abs_mean(r, measures) <= eta) continue;
        if (k == 1) {
            std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
            for (int c : measures[0].support()) {
                int s[1] = {c};
                marginal[static_cast<std::size_t>(c)] = r.value(s) * measures[0].weight(c);
            }
            GreedyPick pick = greedy_last_subset(marginal);
            if (std::abs(pick.value) > eta)
                return Violation{static_cast<int>(i), Box{pick.mask}, pick.value};
            continue;
        }
        // Enumerate masks for coordinates 0..k-2; the last coordinate is
        // exact by the greedy marginal rule.
        std::vector<std::uint64_t> masks(static_cast<std::size_t>(k - 1), 0);
        const std::uint64_t mask_end = std::uint64_t{1} << n;
        std::vector<std::vector<int>> sub(static_cast<std::size_t>(k - 1));
        for (;;) {
            for (int j = 0; j < k - 1; ++j) {
                sub[static_cast<std::size_t>(j)].clear();
                for (int c : lists[static_cast<std::size_t>(j)])
                    if (masks[static_cast<std::size_t>(j)] >> c & 1u) sub[static_cast<std::size_t>(j)].push_back(c);
            }
            std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
            detail::product_scan(
                sub, [&](int j, int c) { return measures[static_cast<std::size_t>(j)].weight(c); },
                [&](std::span<const int> prefix, double w) {
                    std::vector<int> s(prefix.begin(), prefix.end());
                    s.push_back(0);
                    for (int c : measures[static_cast<std::size_t>(k - 1)].support()) {
                        s.back() = c;
                        marginal[static_cast<std::size_t>(c)] +=
                            r.value(s) * w * measures[static_cast<std::size_t>(k - 1)].weight(c);
                    }
                });
            GreedyPick pick = greedy_last_subset(marginal);
            if (std::abs(pick.value) > eta) {
                Box box;
                for (int j = 0; j < k - 1; ++j) {
                    std::vector<char> mask(static_cast<std::size_t>(n), 0);
                    for (int c = 0; c < n; ++c)
                        if (masks[static_cast<std::size_t>(j)] >> c & 1u) mask[static_cast<std::size_t>(c)] = 1;
                    box.push_back(std::move(mask));
                }
                box.push_back(pick.mask);
                return Violation{static_cast<int>(i), std::move(box), pick.value};
            }
            int j = k - 2;
            while (j >= 0) {
                if (++masks[static_cast<std::size_t>(j)] < mask_end) break;
                masks[static_cast<std::size_t>(j)] = 0;
                --j;
            }
            if (j < 0) break;
        }
    }
    return std::nullopt;
}

std::optional<Violation> find_alternating(std::span<const KArray> residuals,
                                          std::span<const CoordinateMeasure> measures, double eta,
                                          const SearchOptions& search) {
    const int k = residuals.front().k();
    const int n = residuals.front().n();
    Rng rng = make_rng(derive_seed(search.seed, 0x626f78));
    const auto lists = support_lists(measures);

    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const KArray& r = residuals[i];
        if (abs_mean(r, measures) <= eta) continue;
        for (int restart = 0; restart < search.restarts; ++restart) {
            Box box(static_cast<std::size_t>(k), std::vector<char>(static_cast<std::size_t>(n), 0));
            for (auto& mask : box)
                for (auto& b : mask) b = (rng() & 1u) ? 1 : 0;
            double best = box_inner_product(r, box, measures);
            for (int round = 0; round < search.max_rounds; ++round) {
                bool improved = false;
                for (int j = 0; j < k; ++j) {
                    // Marginal of the inner product in coordinate j with the
                    // other subsets fixed.
                    std::vector<std::vector<int>> others;
                    others.reserve(static_cast<std::size_t>(k - 1));
                    for (int l = 0; l < k; ++l) {
                        if (l == j) continue;
                        std::vector<int> sel;
                        for (int c : lists[static_cast<std::size_t>(l)])
                            if (box[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)]) sel.push_back(c);
                        others.push_back(std::move(sel));
                    }
                    std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
                    std::vector<int> s(static_cast<std::size_t>(k));
                    detail::product_scan(
                        others,
                        [&](int idx, int c) {
                            int l = idx < j ? idx : idx + 1;
                            return measures[static_cast<std::size_t>(l)].weight(c);
                        },
                        [&](std::span<const int> rest, double w) {
                            for (int l = 0, idx = 0; l < k; ++l)
                                if (l != j) s[static_cast<std::size_t>(l)] = rest[static_cast<std::size_t>(idx++)];
                            for (int c : lists[static_cast<std::size_t>(j)]) {
                                s[static_cast<std::size_t>(j)] = c;
                                marginal[static_cast<std::size_t>(c)] +=
                                    r.value(s) * w * measures[static_cast<std::size_t>(j)].weight(c);
                            }
                        });
                    GreedyPick pick = greedy_last_subset(marginal);
                    if (std::abs(pick.value) > std::abs(best) + 1e-15) {
                        box[static_cast<std::size_t>(j)] = pick.mask;
                        best = pick.value;
                        improved = true;
                    }
                }
                if (!improved) break;
            }
            if (std::abs(best) > eta) {
                // Re-verify before returning; the ascent is heuristic.
                double verified = box_inner_product(r, box, measures);
                if (std::abs(verified) > eta) return Violation{static_cast<int>(i), std::move(box), verified};
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Violation> find_violating_box(std::span<const KArray> residuals,
                                            std::span<const CoordinateMeasure> measures, double eta,
                                            const SearchOptions& search, const Limits& limits) {
    if (residuals.empty()) return std::nullopt;
    if (search.mode == SearchMode::Exhaustive) return find_exhaustive(residuals, measures, eta, limits);
    return find_alternating(residuals, measures, eta, search);
}

RegularizeResult weak_box_regularize(std::span<const KArray> hs, std::span<const CoordinateMeasure> measures,
                                     double eta, const Partition& p0, const SearchOptions& search,
                                     const Limits& limits) {
    if (eta <= 0.0) throw InvalidInput("weak_box_regularize: eta must be positive");
    if (hs.empty()) throw InvalidInput("weak_box_regularize: no arrays");
    const double t = static_cast<double>(hs.size());
    const double max_steps = std::ceil(t / (eta * eta));

    RegularizeResult result;
    result.search = search.mode;
    result.partition = Partition::from_labels(p0.labels);

    auto compute_steps = [&](const Partition& p) {
        std::vector<StepArray> steps;
        steps.reserve(hs.size());
        for (const auto& h : hs) steps.push_back(conditional_expectation(h, p, measures));
        return steps;
    };

    std::vector<StepArray> steps = compute_steps(result.partition);
    double current_energy = energy_of_steps(steps, part_masses(result.partition, measures));

    for (;;) {
        auto residuals = residual_arrays(hs, steps, result.partition);
        auto violation = find_violating_box(residuals, measures, eta, search, limits);
        if (!violation) break;
        if (static_cast<double>(result.trace.steps.size()) >= max_steps)
            throw std::logic_error("weak_box_regularize: exceeded the energy-increment step bound");
        Partition refined = result.partition.refine_by(violation->box);
        std::vector<StepArray> refined_steps = compute_steps(refined);
        double refined_energy = energy_of_steps(refined_steps, part_masses(refined, measures));
        result.trace.steps.push_back(
            TraceStep{violation->array_index, violation->box, current_energy, refined_energy});
        result.partition = std::move(refined);
        steps = std::move(refined_steps);
        current_energy = refined_energy;
    }

    result.step_arrays = std::move(steps);
    result.trace.final_energy = current_energy;
    return result;
}

}  // namespace holofun
