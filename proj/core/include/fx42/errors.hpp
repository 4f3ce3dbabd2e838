#pragma once

#include <stdexcept>
#include <string>

namespace fx42 {

// Bad inputs: malformed files, schema violations, parameter sets that fail
// model admissibility. CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: series that do not converge within budget, quadrature
// that cannot reach tolerance, ill-conditioned solves. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fx42
