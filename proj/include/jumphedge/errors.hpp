#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace jumphedge {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside the domain where the operation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation point sits on a singularity of the function (e.g. a barrier endpoint of a density).
class SingularPointError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A modelling hypothesis is violated along a path (e.g. non-positive hedge slope).
class HypothesisViolation : public Error {
public:
    using Error::Error;
};

/// A discretization rule evaluated to a non-positive barrier.
class RuleViolation : public Error {
public:
    using Error::Error;
};

/// Requested value lies outside a sampled table; no extrapolation is attempted.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Golden-section search converged onto the boundary of its box.
class SearchBoxError : public Error {
public:
    using Error::Error;
};

/// Not enough points (or no spread) for a regression.
class FitDegenerateError : public Error {
public:
    using Error::Error;
};

/// Impossible state reached; indicates a bug or a broken invariant.
class InternalError : public Error {
public:
    using Error::Error;
};

/// A single simulated path exceeded its step budget.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(std::size_t path_index, std::size_t max_steps)
        : Error("path " + std::to_string(path_index) + " exceeded the step budget of " +
                std::to_string(max_steps) + " steps"),
          path_index_(path_index) {}

    std::size_t path_index() const noexcept { return path_index_; }

private:
    std::size_t path_index_;
};

/// Invalid experiment configuration. `field()` is a dotted path into the config document.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace jumphedge
