#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nrpl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: a non-positive radius, an unknown unit, a malformed sweep spec.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A formula evaluated outside its domain (pole, sign change, zero reference).
class DomainError : public Error {
public:
    DomainError(std::string precondition, const std::string& what)
        : Error(what), precondition_(std::move(precondition)) {}

    /// Short machine-readable name of the violated precondition.
    const std::string& precondition() const noexcept { return precondition_; }

private:
    std::string precondition_;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_residual, int iterations)
        : Error(what), last_residual_(last_residual), iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

/// The steady-state map has more than one attractor; no branch is chosen silently.
class MultistableError : public SolverError {
public:
    MultistableError(const std::string& what, double x_first, double x_second)
        : SolverError(what, 0.0, 0), x_first_(x_first), x_second_(x_second) {}

    double first_displacement() const noexcept { return x_first_; }
    double second_displacement() const noexcept { return x_second_; }

private:
    double x_first_;
    double x_second_;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double time_reached)
        : Error(what), time_reached_(time_reached) {}

    double time_reached() const noexcept { return time_reached_; }

private:
    double time_reached_;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

/// A bracketing search was handed a grid without a sign change.
class BracketError : public Error {
public:
    using Error::Error;
};

}  // namespace nrpl
