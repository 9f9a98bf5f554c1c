#pragma once

#include <cstdint>
#include <vector>

#include "holofun/errors.hpp"

namespace holofun {

using Bit = std::uint8_t;
using BitString = std::vector<Bit>;

// Canonical table ordering: coordinate 1 is the most significant bit.
// bits_from_index(0b10, 2) == {1, 0}.
inline std::uint64_t bit_index(const BitString& x) {
    std::uint64_t idx = 0;
    for (Bit b : x) idx = (idx << 1) | (b ? 1u : 0u);
    return idx;
}

inline BitString bits_from_index(std::uint64_t idx, int n) {
    BitString x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = static_cast<Bit>((idx >> (n - 1 - i)) & 1u);
    return x;
}

inline void check_dimension(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw InvalidInput(std::string(what) + ": dimension mismatch, got " + std::to_string(got) +
                           ", expected " + std::to_string(want));
}

}  // namespace holofun
