#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meshmove {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, bad connectivity, bad configuration.
/// The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class FormatError : public ValidationError {
public:
    FormatError(const std::string& what, std::size_t line)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class TopologyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class GeometryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure: rank deficiency, singular solves, divergence.
/// The CLI maps this family to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class RankDeficiencyError : public NumericalError {
public:
    RankDeficiencyError(const std::string& what, int node)
        : NumericalError("node " + std::to_string(node) + ": " + what), node_(node) {}

    int node() const noexcept { return node_; }

private:
    int node_;
};

class PerturbationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SolverError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AdaptError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace meshmove
