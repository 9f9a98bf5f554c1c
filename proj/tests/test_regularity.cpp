#include <doctest.h>

#include <cmath>

#include "holofun/regularity.hpp"
#include "test_util.hpp"

using namespace holofun;

namespace {

Box full_box(int n, int k) { return Box(static_cast<std::size_t>(k), std::vector<char>(static_cast<std::size_t>(n), 1)); }

std::vector<CoordinateMeasure> uniform_measures(int n, int k) {
    return std::vector<CoordinateMeasure>(static_cast<std::size_t>(k), CoordinateMeasure::uniform(n));
}

}  // namespace

TEST_CASE("box inner product basics") {
    auto ms = uniform_measures(3, 2);
    KArray c = KArray::procedural(3, 2, [](std::span<const int>) { return 0.4; });
    CHECK(box_inner_product(c, full_box(3, 2), ms) == doctest::Approx(0.4).epsilon(1e-12));

    auto ms1 = uniform_measures(2, 1);
    KArray h = KArray::dense(2, 1, {0.0, 1.0});
    Box second{std::vector<char>{0, 1}};
    CHECK(box_inner_product(h, second, ms1) == doctest::Approx(0.5).epsilon(1e-12));

    Box empty{std::vector<char>{0, 0}};
    CHECK(box_inner_product(h, empty, ms1) == 0.0);
}

TEST_CASE("conditional expectation: singleton, trivial, weighted mean") {
    auto ms = uniform_measures(2, 1);
    KArray h = KArray::dense(2, 1, {0.0, 1.0});

    Partition singleton = Partition::from_labels({0, 1});
    StepArray w = conditional_expectation(h, singleton, ms);
    CHECK(w.w[0] == doctest::Approx(0.0));
    CHECK(w.w[1] == doctest::Approx(1.0));

    StepArray mean = conditional_expectation(h, Partition::trivial(2), ms);
    CHECK(mean.w[0] == doctest::Approx(0.5));

    std::vector<CoordinateMeasure> skew{CoordinateMeasure::from_weights({0.25, 0.75})};
    StepArray wm = conditional_expectation(h, Partition::trivial(2), skew);
    CHECK(wm.w[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("energy values and monotonicity under refinement") {
    auto ms = uniform_measures(2, 1);
    std::vector<KArray> ones;
    for (int i = 0; i < 3; ++i) ones.push_back(KArray::procedural(2, 1, [](std::span<const int>) { return 1.0; }));
    CHECK(energy(ones, Partition::trivial(2), ms) == doctest::Approx(3.0).epsilon(1e-12));

    std::vector<KArray> h{KArray::dense(2, 1, {0.0, 1.0})};
    CHECK(energy(h, Partition::trivial(2), ms) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(energy(h, Partition::from_labels({0, 1}), ms) == doctest::Approx(0.5).epsilon(1e-12));

    Rng rng = make_rng(55);
    for (int inst = 0; inst < 10; ++inst) {
        int n = 3 + static_cast<int>(rng() % 4);
        int k = 1 + static_cast<int>(rng() % 2);
        std::vector<CoordinateMeasure> measures;
        for (int j = 0; j < k; ++j) measures.push_back(testutil::random_measure(n, rng));
        std::size_t cells = 1;
        for (int j = 0; j < k; ++j) cells *= static_cast<std::size_t>(n);
        std::vector<KArray> hs{KArray::dense(n, k, testutil::random_table(cells, rng))};
        // Random coarse partition and a random refinement of it.
        std::vector<int> coarse_labels(static_cast<std::size_t>(n));
        for (auto& l : coarse_labels) l = static_cast<int>(rng() % 2);
        Partition coarse = Partition::from_labels(coarse_labels);
        std::vector<int> fine_labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            fine_labels[static_cast<std::size_t>(i)] =
                coarse.labels[static_cast<std::size_t>(i)] * 2 + static_cast<int>(rng() % 2);
        Partition fine = Partition::from_labels(fine_labels);
        REQUIRE(fine.refines(coarse));
        CHECK(energy(hs, fine, measures) >= energy(hs, coarse, measures) - 1e-9);
    }
}

TEST_CASE("find_violating_box: zero residuals, known box, threshold") {
    auto ms = uniform_measures(2, 1);
    SearchOptions search;

    std::vector<KArray> zeros{KArray::procedural(2, 1, [](std::span<const int>) { return 0.0; })};
    CHECK(!find_violating_box(zeros, ms, 0.1, search).has_value());

    std::vector<KArray> res{KArray::procedural(2, 1, [](std::span<const int> s) {
        return s[0] == 0 ? -0.5 : 0.5;
    })};
    auto hit = find_violating_box(res, ms, 0.2, search);
    REQUIRE(hit.has_value());
    CHECK(hit->array_index == 0);
    CHECK(std::abs(hit->value) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hit->box[0] == std::vector<char>{0, 1});

    CHECK(!find_violating_box(res, ms, 0.3, search).has_value());
}

TEST_CASE("alternating search only returns genuine violations") {
    Rng rng = make_rng(66);
    SearchOptions alt;
    alt.mode = SearchMode::Alternating;
    alt.seed = 7;
    for (int inst = 0; inst < 10; ++inst) {
        int n = 3 + static_cast<int>(rng() % 4);
        int k = 1 + static_cast<int>(rng() % 2);
        std::vector<CoordinateMeasure> measures;
        for (int j = 0; j < k; ++j) measures.push_back(testutil::random_measure(n, rng));
        std::size_t cells = 1;
        for (int j = 0; j < k; ++j) cells *= static_cast<std::size_t>(n);
        std::vector<double> values = testutil::random_table(cells, rng);
        // Center to create signed residual-like arrays.
        std::vector<KArray> res{KArray::procedural(n, k, [values, n](std::span<const int> s) {
            std::size_t flat = 0;
            for (int v : s) flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
            return values[flat] - 0.5;
        })};
        auto hit = find_violating_box(res, measures, 0.05, alt);
        if (hit) {
            double verified = box_inner_product(res[0], hit->box, measures);
            CHECK(std::abs(verified) > 0.05);
        }
    }
}

TEST_CASE("weak_box_regularize: constants, the two-point run, step bound") {
    auto ms = uniform_measures(2, 1);
    SearchOptions search;

    std::vector<KArray> consts{KArray::procedural(2, 1, [](std::span<const int>) { return 0.7; })};
    auto flat = weak_box_regularize(consts, ms, 0.2, Partition::trivial(2), search);
    CHECK(flat.trace.steps.empty());
    CHECK(flat.partition.m == 1);

    std::vector<KArray> h{KArray::dense(2, 1, {0.0, 1.0})};
    auto run = weak_box_regularize(h, ms, 0.2, Partition::trivial(2), search);
    CHECK(run.trace.steps.size() == 1);
    CHECK(run.partition.m == 2);
    CHECK(run.trace.steps[0].energy_before == doctest::Approx(0.25));
    CHECK(run.trace.steps[0].energy_after == doctest::Approx(0.5));
    auto residuals = residual_arrays(h, run.step_arrays, run.partition);
    CHECK(!find_violating_box(residuals, ms, 1e-9, search).has_value());

    // t = 1, eta = 0.5: at most ceil(1/0.25) = 4 steps on any instance.
    Rng rng = make_rng(77);
    for (int inst = 0; inst < 5; ++inst) {
        std::vector<KArray> hs{KArray::dense(6, 1, testutil::random_table(6, rng))};
        std::vector<CoordinateMeasure> m1{testutil::random_measure(6, rng)};
        auto r = weak_box_regularize(hs, m1, 0.5, Partition::trivial(6), search);
        CHECK(r.trace.steps.size() <= 4);
    }
}

TEST_CASE("regularize trace: energy gains of eta^2 and certified residuals") {
    Rng rng = make_rng(88);
    SearchOptions search;
    for (int inst = 0; inst < 8; ++inst) {
        int n = 3 + static_cast<int>(rng() % 4);
        int k = 1 + static_cast<int>(rng() % 2);
        int t = 1 + static_cast<int>(rng() % 3);
        double eta = 0.12 + 0.1 * uniform01(rng);
        std::vector<CoordinateMeasure> measures;
        for (int j = 0; j < k; ++j) measures.push_back(testutil::random_measure(n, rng));
        std::size_t cells = 1;
        for (int j = 0; j < k; ++j) cells *= static_cast<std::size_t>(n);
        std::vector<KArray> hs;
        for (int i = 0; i < t; ++i) hs.push_back(KArray::dense(n, k, testutil::random_table(cells, rng)));

        auto result = weak_box_regularize(hs, measures, eta, Partition::trivial(n), search);
        CHECK(static_cast<double>(result.trace.steps.size()) <= std::ceil(t / (eta * eta)));
        for (const auto& step : result.trace.steps)
            CHECK(step.energy_after - step.energy_before >= eta * eta - 1e-9);
        double bound = std::pow(2.0, k * static_cast<double>(result.trace.steps.size()));
        CHECK(result.partition.m <= bound);

        auto residuals = residual_arrays(hs, result.step_arrays, result.partition);
        CHECK(!find_violating_box(residuals, measures, eta, search).has_value());
    }
}

TEST_CASE("refinement prunes empty parts and compacts labels") {
    Partition p = Partition::trivial(4);
    Box box{std::vector<char>{1, 1, 0, 0}, std::vector<char>{1, 0, 1, 0}};
    Partition q = p.refine_by(box);
    CHECK(q.m == 4);
    CHECK(q.labels == std::vector<int>{0, 1, 2, 3});
    // Refining by an all-ones mask changes nothing.
    Box ones{std::vector<char>{1, 1, 1, 1}};
    Partition r = q.refine_by(ones);
    CHECK(r.m == 4);
    CHECK(r.labels == q.labels);
}
