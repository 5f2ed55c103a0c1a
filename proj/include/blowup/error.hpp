#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blowup {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based byte offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A partial operation was applied outside its domain (log of a
/// non-positive value, division by zero, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not reach a decision (e.g. an
/// inconclusive divergence diagnosis where a verdict is required).
class InconclusiveError : public Error {
public:
    using Error::Error;
};

} // namespace blowup
