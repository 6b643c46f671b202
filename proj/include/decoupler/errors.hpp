// errors.hpp - exception types shared across the toolkit

#pragma once

#include <stdexcept>
#include <string>

namespace decoupler {

// Malformed or out-of-contract experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fit non-convergence, quadrature failure and similar (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace decoupler
