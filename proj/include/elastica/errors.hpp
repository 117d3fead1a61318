#pragma once

#include <stdexcept>
#include <string>

namespace elastica {

// Process exit codes surfaced by the CLI.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    data = 3,
    divergence = 4,
    io = 5,
};

// Base for every error raised by the library. Each subclass maps onto one
// exit code so the CLI can report failures without inspecting messages.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& kind, const std::string& what)
        : std::runtime_error(what), code_(code), kind_(kind) {}

    ExitCode code() const noexcept { return code_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ExitCode code_;
    std::string kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ExitCode::usage, "usage", what) {}
};

// Argument outside the mathematical domain of a function (e.g. price <= 0).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ExitCode::data, "domain", what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::data, "data", what) {}
};

class LookupError : public Error {
public:
    explicit LookupError(const std::string& what) : Error(ExitCode::data, "lookup", what) {}
};

// Metric is undefined for the given input (e.g. MAPE with every actual zero).
class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& what)
        : Error(ExitCode::data, "undefined-metric", what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what)
        : Error(ExitCode::divergence, "numeric", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ExitCode::io, "io", what) {}
};

// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);

}  // namespace elastica
