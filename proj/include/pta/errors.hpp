#pragma once

#include <stdexcept>
#include <string>

namespace pta {

// Bad user input: malformed files, out-of-range parameters, shape mismatches.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally broken input file (duplicate cells, bad header, unparseable field).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside a solver (singular system, non-finite values).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pta
