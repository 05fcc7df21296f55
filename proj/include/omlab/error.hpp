#pragma once

#include <stdexcept>
#include <string>

namespace omlab {

/// Bad input: malformed expressions, invalid configs, out-of-range arguments.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A mass backend could not produce usable data on the requested radii.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// A harness precondition (e.g. a confirmed local dimension) does not hold.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace omlab
