#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lipcert {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed spec document. Carries the byte offset reported by the JSON parser
// (or 0 when the failure is structural rather than lexical).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at byte " + std::to_string(position) + ")"), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// A well-formed document that violates a structural invariant of the network graph.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Power iteration ran out of iterations. Keeps the last iterate so callers can inspect it.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_value, double residual, std::vector<double> iterate)
        : Error(what), last_value_(last_value), residual_(residual), iterate_(std::move(iterate)) {}
    double last_value() const noexcept { return last_value_; }
    double residual() const noexcept { return residual_; }
    const std::vector<double>& iterate() const noexcept { return iterate_; }

private:
    double last_value_;
    double residual_;
    std::vector<double> iterate_;
};

}  // namespace lipcert
