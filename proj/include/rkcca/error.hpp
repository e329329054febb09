#pragma once

#include <stdexcept>
#include <string>

namespace rkcca {

/// Bad input: malformed files, violated preconditions, inconsistent shapes.
/// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that cannot produce a meaningful result for valid input
/// (degenerate sample, weights collapsing to zero mass). Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string &msg) {
    if (!cond) { throw ValidationError(msg); }
}

}  // namespace detail
}  // namespace rkcca
