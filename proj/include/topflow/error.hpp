#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace topflow {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Text-format problems: carries the 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {}
    long line;
};

struct ConfigError : Error {
    using Error::Error;
};

struct MeshError : Error {
    using Error::Error;
};

struct SolverError : Error {
    SolverError(const std::string& msg, std::vector<double> residual_history = {},
                long pivot_index = -1)
        : Error(msg), residual_history(std::move(residual_history)), pivot_index(pivot_index) {}
    std::vector<double> residual_history;
    long pivot_index;  // -1 when unknown
};

}  // namespace topflow
