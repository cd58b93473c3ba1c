#pragma once

#include <stdexcept>
#include <string>

namespace formlab {

// Bad inputs: malformed graphs, infeasible designs, inconsistent dimensions.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// The graph shape rules out the requested analysis (e.g. a cycle where a
// tree is required). Subtype of ValidationError so generic handling still works.
class UnsupportedTopologyError : public ValidationError {
public:
    explicit UnsupportedTopologyError(const std::string& what) : ValidationError(what) {}
};

// Numeric/stability failures: singular systems, eigensolver breakdown,
// step sizes outside the stable region. The CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace formlab
