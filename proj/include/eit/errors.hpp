#pragma once

#include <stdexcept>
#include <string>

namespace eit {

/// Invalid argument to a toolkit operation (bad level, bad contrast, malformed
/// region, incompatible matrix sizes, ...).
class parameter_error : public std::invalid_argument {
public:
    explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure (singular factorization, unconverged eigensolve,
/// residual beyond tolerance). The message carries the diagnostic.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace eit
