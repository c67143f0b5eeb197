#pragma once

#include <stdexcept>
#include <string>

namespace hminlag {

/// Base of every error thrown by the library. `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension_mismatch"; }
};

class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// Evaluation too close to a point where the immersion degenerates.
class SingularPointError : public Error {
public:
    SingularPointError(std::string factor, const std::string& what)
        : Error(what), factor_(std::move(factor)) {}
    const char* kind() const noexcept override { return "singular_point"; }
    const std::string& factor() const noexcept { return factor_; }

private:
    std::string factor_;
};

class IntegrationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "integration_failure"; }
};

class QuadratureError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "quadrature_failure"; }
};

class NumericalQualityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical_quality"; }
};

class InconclusiveError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "inconclusive"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config"; }
};

}  // namespace hminlag
