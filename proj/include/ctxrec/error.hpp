#pragma once

#include <stdexcept>
#include <string>

namespace ctxrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Malformed input text (dataset rows, matrix files, query strings, config files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Dangling references or cross-file count mismatches.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class DuplicateError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Value outside the domain an operation accepts.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative numeric routine failed to converge. Carries the last residual.
class NumericError : public Error {
public:
    NumericError(const std::string& message, double residual)
        : Error(message), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Operation precondition violated by the input as a whole (e.g. too few ratings to split).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Incomplete or inconsistent AHP hierarchy.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Pre-filtering left the target user without a usable neighborhood.
class ColdStartError : public Error {
public:
    using Error::Error;
};

}  // namespace ctxrec
