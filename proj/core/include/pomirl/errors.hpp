#pragma once

#include <stdexcept>
#include <string>

namespace pomirl {

// Base error carrying a short machine-parsable class tag next to the
// human-readable message. The CLI prints "<tag>: <message>" on one line
// and maps the tag to an exit code.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& message)
        : std::runtime_error(message), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

// Malformed input documents (bad JSON, bad values, schema violations).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse-error", message) {}
};

// Structurally well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("model-invalid", message) {}
};

// Observation sequence impossible under the model (zero-probability filter update).
class InconsistentTraceError : public Error {
public:
    explicit InconsistentTraceError(const std::string& message)
        : Error("inconsistent-trace", message) {}
};

// LP backend could not produce a trustworthy answer.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& message) : Error("lp-failure", message) {}
};

// Specification cannot be satisfied with positive probability on the model.
class SpecUnsatisfiableError : public Error {
public:
    explicit SpecUnsatisfiableError(const std::string& message)
        : Error("spec-unsatisfiable", message) {}
};

} // namespace pomirl
