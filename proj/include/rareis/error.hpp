#pragma once

#include <stdexcept>
#include <string>

namespace rareis {

// Argument outside the domain of a model primitive (state outside the box,
// negative rates, non-finite tilts, singular quadrature).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inconsistent model / policy / run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce an answer (no bracketed root,
// oracle instance too large, non-finite likelihood ratio).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rareis
