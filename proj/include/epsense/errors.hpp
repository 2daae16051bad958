#pragma once

#include <stdexcept>
#include <string>

namespace epsense {

/// Invalid user-supplied parameter (dimensions, ranges, malformed flags).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure: factorization breakdown, non-convergent root find, infeasible system.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace epsense
