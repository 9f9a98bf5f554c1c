#pragma once

#include <span>
#include <vector>

namespace holofun::detail {

// Kahan-compensated accumulator; long support-product sums would otherwise
// pick up enough rounding noise to pollute step arrays and assembled
// polynomial coefficients.
struct Kahan {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// Number of tuples in the product of the lists, as a double (may be huge).
inline double product_count(std::span<const std::vector<int>> lists) {
    double c = 1.0;
    for (const auto& l : lists) c *= static_cast<double>(l.size());
    return c;
}

// Odometer over lists[0] x ... x lists[k-1]. Calls fn(s, weight) for every
// tuple with weight = prod_j weight_of(j, s[j]); weights are maintained with
// prefix products, so the amortized per-tuple cost is O(1).
template <class WeightFn, class Fn>
void product_scan(std::span<const std::vector<int>> lists, WeightFn&& weight_of, Fn&& fn) {
    const int k = static_cast<int>(lists.size());
    if (k == 0) {
        fn(std::span<const int>{}, 1.0);
        return;
    }
    for (const auto& l : lists)
        if (l.empty()) return;
    std::vector<int> pos(static_cast<std::size_t>(k), 0);
    std::vector<int> s(static_cast<std::size_t>(k));
    std::vector<double> prefix(static_cast<std::size_t>(k) + 1);
    prefix[0] = 1.0;
    for (int j = 0; j < k; ++j) {
        s[j] = lists[j][0];
        prefix[j + 1] = prefix[j] * weight_of(j, s[j]);
    }
    for (;;) {
        fn(std::span<const int>(s), prefix[static_cast<std::size_t>(k)]);
        int j = k - 1;
        while (j >= 0) {
            if (++pos[j] < static_cast<int>(lists[j].size())) break;
            pos[j] = 0;
            --j;
        }
        if (j < 0) break;
        for (int l = j; l < k; ++l) {
            s[l] = lists[l][pos[l]];
            prefix[l + 1] = prefix[l] * weight_of(l, s[l]);
        }
    }
}

// product_scan that additionally maintains an integer prefix sum
// acc = sum_j int_of(j, s[j]) alongside the weight product.
template <class WeightFn, class IntFn, class Fn>
void product_scan_acc(std::span<const std::vector<int>> lists, WeightFn&& weight_of, IntFn&& int_of,
                      Fn&& fn) {
    const int k = static_cast<int>(lists.size());
    if (k == 0) {
        fn(std::span<const int>{}, 1.0, 0);
        return;
    }
    for (const auto& l : lists)
        if (l.empty()) return;
    std::vector<int> pos(static_cast<std::size_t>(k), 0);
    std::vector<int> s(static_cast<std::size_t>(k));
    std::vector<double> prefix(static_cast<std::size_t>(k) + 1);
    std::vector<int> acc(static_cast<std::size_t>(k) + 1);
    prefix[0] = 1.0;
    acc[0] = 0;
    for (int j = 0; j < k; ++j) {
        s[j] = lists[j][0];
        prefix[j + 1] = prefix[j] * weight_of(j, s[j]);
        acc[j + 1] = acc[j] + int_of(j, s[j]);
    }
    for (;;) {
        fn(std::span<const int>(s), prefix[static_cast<std::size_t>(k)], acc[static_cast<std::size_t>(k)]);
        int j = k - 1;
        while (j >= 0) {
            if (++pos[j] < static_cast<int>(lists[j].size())) break;
            pos[j] = 0;
            --j;
        }
        if (j < 0) break;
        for (int l = j; l < k; ++l) {
            s[l] = lists[l][pos[l]];
            prefix[l + 1] = prefix[l] * weight_of(l, s[l]);
            acc[l + 1] = acc[l] + int_of(l, s[l]);
        }
    }
}

}  // namespace holofun::detail
