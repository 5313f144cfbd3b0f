#pragma once

#include <stdexcept>
#include <string>

namespace ivmcd {

/// Malformed input: bad files, invalid parameters, dimension mismatches.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical quantity that must be non-degenerate is not: a singular
/// covariance, a zero spread, an empty reweighting.
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

[[noreturn]] inline void throw_input(const std::string& msg) { throw InputError(msg); }
[[noreturn]] inline void throw_degenerate(const std::string& msg) { throw DegenerateError(msg); }

}  // namespace detail

#define IVMCD_REQUIRE(cond, msg)                                                          \
    do {                                                                                  \
        if (!(cond)) ::ivmcd::detail::throw_input(msg);                                   \
    } while (0)

}  // namespace ivmcd
