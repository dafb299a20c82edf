#pragma once

#include <stdexcept>
#include <string>

namespace maxdeficit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or empty argument (empty sample set, bad spec string, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A root bracket without a sign change.
class BracketError : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A semi-infinite integral did not settle within the panel budget.
class TruncationError : public ConvergenceError {
public:
    TruncationError(const std::string& what, double partial)
        : ConvergenceError(what + " (partial value " + std::to_string(partial) + ")"),
          partial_(partial) {}

    double partial() const noexcept { return partial_; }

private:
    double partial_;
};

/// A requested combination of inputs has no implementation (e.g. closed form at finite horizon).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// The model violates a structural assumption (non-monotone marginal, zero capital, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

}  // namespace maxdeficit
