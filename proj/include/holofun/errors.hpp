#pragma once

#include <stdexcept>
#include <string>

namespace holofun {

// Thrown when an exact-enumeration or exhaustive sweep would exceed the
// configured budget. Callers may fall back to Monte Carlo / heuristic modes.
class LimitExceeded : public std::runtime_error {
public:
    explicit LimitExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: dimension mismatches, invalid parameters, schema errors.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace holofun
